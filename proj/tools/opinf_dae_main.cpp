#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <boost/program_options.hpp>
#include <nlohmann/json.hpp>

#include "opinf/errors.hpp"
#include "opinf/pipeline.hpp"

namespace {

namespace po = boost::program_options;

const char* kUsage =
    "usage: opinf-dae <simulate|pod|infer|rom|compare|oracle|pipeline>"
    " --config <path> [--config <path> ...] [--out <dir>] [--fixed-r N] [--verbose]\n";

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const opinf::ConfigError*>(&e)) return "config";
  if (dynamic_cast<const opinf::ArtifactError*>(&e)) return "artifact";
  if (dynamic_cast<const opinf::ConvergenceError*>(&e)) return "convergence";
  if (dynamic_cast<const opinf::NotPositiveDefiniteError*>(&e)) return "not_positive_definite";
  if (dynamic_cast<const opinf::RankDeficiencyError*>(&e)) return "rank_deficiency";
  if (dynamic_cast<const opinf::IoError*>(&e)) return "io";
  if (dynamic_cast<const opinf::Error*>(&e)) return "error";
  return "internal";
}

void report_error(std::mutex& gate, const std::string& config, const std::exception& e) {
  nlohmann::ordered_json record;
  record["error"] = error_kind(e);
  record["message"] = e.what();
  if (!config.empty()) record["config"] = config;
  const std::lock_guard<std::mutex> lock(gate);
  std::cerr << record.dump() << std::endl;
}

std::size_t worker_cap(std::size_t jobs) {
  const std::size_t hardware = std::max<std::size_t>(std::thread::hardware_concurrency(), 1);
  std::size_t cap = std::min(jobs, hardware);
  if (const char* env = std::getenv("OPINF_DAE_THREADS")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || parsed < 1)
      throw opinf::ConfigError("OPINF_DAE_THREADS must be a positive integer");
    cap = std::min(cap, static_cast<std::size_t>(parsed));
  }
  return std::max<std::size_t>(cap, 1);
}

}  // namespace

int main(int argc, char** argv) {
  std::string command;
  std::vector<std::string> configs;
  std::string out;
  long fixed_r = 0;
  bool verbose = false;

  po::options_description options("options");
  options.add_options()                                                                       //
      ("command", po::value<std::string>(&command), "stage to run")                          //
      ("config", po::value<std::vector<std::string>>(&configs)->composing(),
       "config file, repeatable")                                                            //
      ("out", po::value<std::string>(&out), "override the config's output directory")        //
      ("fixed-r", po::value<long>(&fixed_r), "override truncation with a fixed basis size")  //
      ("verbose", po::bool_switch(&verbose), "print stage progress")                         //
      ("help,h", "show usage");
  po::positional_options_description positional;
  positional.add("command", 1);

  std::mutex gate;
  po::variables_map vm;
  try {
    po::store(po::command_line_parser(argc, argv).options(options).positional(positional).run(),
              vm);
    po::notify(vm);
  } catch (const po::error& e) {
    report_error(gate, "", opinf::ConfigError(e.what()));
    std::cerr << kUsage;
    return 2;
  }
  if (vm.count("help") != 0) {
    std::cout << kUsage;
    return 0;
  }

  std::size_t workers = 1;
  try {
    if (command.empty()) throw opinf::ConfigError("no command given");
    if (configs.empty()) throw opinf::ConfigError("no --config given");
    if (!out.empty() && configs.size() > 1)
      throw opinf::ConfigError("--out needs a single --config");
    if (vm.count("fixed-r") != 0 && fixed_r < 1)
      throw opinf::ConfigError("--fixed-r must be at least 1");
    workers = worker_cap(configs.size());
  } catch (const std::exception& e) {
    report_error(gate, "", e);
    std::cerr << kUsage;
    return 2;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  const auto worker = [&]() {
    for (std::size_t j = next.fetch_add(1); j < configs.size(); j = next.fetch_add(1)) {
      try {
        opinf::PipelineConfig config = opinf::load_config(configs[j]);
        config.verbose = verbose;
        if (!out.empty()) config.output_dir = out;
        if (fixed_r > 0) config.truncation = opinf::TruncationRule::fixed(fixed_r);
        opinf::run_stage(command, config);
      } catch (const std::exception& e) {
        failures.fetch_add(1);
        report_error(gate, configs[j], e);
      }
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  return failures.load() == 0 ? 0 : 1;
}
