#include "opinf/pipeline.hpp"

#include <algorithm>
#include <initializer_list>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opinf/errors.hpp"
#include "opinf/matrixmarket.hpp"

namespace opinf {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) known = known || it.key() == key;
    if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + section);
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number_at(const json& obj, const char* key, const std::string& section, double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(section + "." + key + " must be a number");
  return v->get<double>();
}

Index integer_at(const json& obj, const char* key, const std::string& section, Index fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw ConfigError(section + "." + key + " must be an integer");
  return v->get<Index>();
}

bool bool_at(const json& obj, const char* key, const std::string& section, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(section + "." + key + " must be a boolean");
  return v->get<bool>();
}

std::string string_at(const json& obj, const char* key, const std::string& section) {
  const json* v = find(obj, key);
  if (!v || !v->is_string()) throw ConfigError(section + " needs a string '" + key + "'");
  return v->get<std::string>();
}

std::vector<Index> index_list_at(const json& obj, const char* key, const std::string& section) {
  const json* v = find(obj, key);
  if (!v) return {};
  if (!v->is_array()) throw ConfigError(section + "." + key + " must be an array of integers");
  std::vector<Index> out;
  for (const auto& entry : *v) {
    if (!entry.is_number_integer())
      throw ConfigError(section + "." + key + " must be an array of integers");
    out.push_back(entry.get<Index>());
  }
  return out;
}

ModelSpec parse_model(const json& obj) {
  if (!obj.is_object()) throw ConfigError("model must be an object");
  ModelSpec spec;
  const bool has_builtin = obj.contains("builtin");
  const bool has_path = obj.contains("path");
  if (has_builtin == has_path)
    throw ConfigError("model needs exactly one of 'builtin' and 'path'");
  if (has_path) {
    check_keys(obj, "model", {"path"});
    spec.path = string_at(obj, "path", "model");
    return spec;
  }
  spec.builtin = string_at(obj, "builtin", "model");
  if (spec.builtin == "anchored_chain") {
    check_keys(obj, "model",
               {"builtin", "n_masses", "mass", "stiffness", "damping", "load_nodes",
                "output_nodes"});
    spec.n_masses = integer_at(obj, "n_masses", "model", spec.n_masses);
    spec.damping = number_at(obj, "damping", "model", spec.damping);
  } else if (spec.builtin == "triple_chain") {
    check_keys(obj, "model",
               {"builtin", "chain_length", "mass", "stiffness", "damping_alpha", "damping_beta",
                "load_nodes", "output_nodes"});
    spec.chain_length = integer_at(obj, "chain_length", "model", spec.chain_length);
    spec.damping_alpha = number_at(obj, "damping_alpha", "model", spec.damping_alpha);
    spec.damping_beta = number_at(obj, "damping_beta", "model", spec.damping_beta);
  } else {
    throw ConfigError("unknown builtin model '" + spec.builtin + "'");
  }
  spec.mass = number_at(obj, "mass", "model", spec.mass);
  spec.stiffness = number_at(obj, "stiffness", "model", spec.stiffness);
  spec.load_nodes = index_list_at(obj, "load_nodes", "model");
  spec.output_nodes = index_list_at(obj, "output_nodes", "model");
  return spec;
}

SignalSpec parse_signal(const json& obj, const std::string& section) {
  if (!obj.is_object()) throw ConfigError(section + " must be an object");
  SignalSpec spec;
  spec.kind = string_at(obj, "kind", section);
  if (spec.kind == "zero") {
    check_keys(obj, section, {"kind"});
  } else if (spec.kind == "impulse") {
    check_keys(obj, section, {"kind", "amplitude", "width"});
    spec.amplitude = number_at(obj, "amplitude", section, spec.amplitude);
    spec.width = number_at(obj, "width", section, spec.width);
    if (!(spec.width > 0.0)) throw ConfigError(section + ".width must be positive");
  } else if (spec.kind == "harmonic") {
    check_keys(obj, section, {"kind", "amplitude", "omega", "phase"});
    spec.amplitude = number_at(obj, "amplitude", section, spec.amplitude);
    spec.omega = number_at(obj, "omega", section, spec.omega);
    spec.phase = number_at(obj, "phase", section, spec.phase);
  } else {
    throw ConfigError("unknown signal kind '" + spec.kind + "' in " + section);
  }
  return spec;
}

TimeGrid parse_grid(const json& obj) {
  if (!obj.is_object()) throw ConfigError("grid must be an object");
  check_keys(obj, "grid", {"t0", "dt", "steps"});
  if (!obj.contains("dt") || !obj.contains("steps"))
    throw ConfigError("grid needs 'dt' and 'steps'");
  TimeGrid grid;
  grid.t0 = number_at(obj, "t0", "grid", 0.0);
  grid.dt = number_at(obj, "dt", "grid", grid.dt);
  grid.steps = integer_at(obj, "steps", "grid", grid.steps);
  validate_grid(grid);
  return grid;
}

TruncationRule parse_truncation(const json& obj) {
  if (!obj.is_object()) throw ConfigError("truncation must be an object");
  const std::string rule = string_at(obj, "rule", "truncation");
  if (rule == "fixed_r") {
    check_keys(obj, "truncation", {"rule", "r"});
    const Index r = integer_at(obj, "r", "truncation", 0);
    if (r < 1) throw ConfigError("truncation.r must be at least 1");
    return TruncationRule::fixed(r);
  }
  if (rule == "energy_threshold") {
    check_keys(obj, "truncation", {"rule", "tau"});
    const double tau = number_at(obj, "tau", "truncation", 0.0);
    if (!(tau > 0.0) || tau > 1.0) throw ConfigError("truncation.tau must lie in (0, 1]");
    return TruncationRule::threshold(tau);
  }
  if (rule == "energy_saturation") {
    check_keys(obj, "truncation", {"rule", "window", "eps"});
    const Index window = integer_at(obj, "window", "truncation", 5);
    const double eps = number_at(obj, "eps", "truncation", 1e-6);
    if (window < 1) throw ConfigError("truncation.window must be at least 1");
    if (!(eps > 0.0)) throw ConfigError("truncation.eps must be positive");
    return TruncationRule::saturation(window, eps);
  }
  throw ConfigError("unknown truncation rule '" + rule + "'");
}

HorizonSpec parse_horizon(const json& obj) {
  if (!obj.is_object()) throw ConfigError("train_horizon must be an object");
  HorizonSpec spec;
  if (const json* v = find(obj, "mode")) {
    if (!v->is_string()) throw ConfigError("train_horizon.mode must be a string");
    spec.mode = v->get<std::string>();
  }
  if (spec.mode == "auto") {
    check_keys(obj, "train_horizon", {"mode", "fraction"});
    spec.fraction = number_at(obj, "fraction", "train_horizon", spec.fraction);
    if (!(spec.fraction > 0.0) || spec.fraction >= 1.0)
      throw ConfigError("train_horizon.fraction must lie in (0, 1)");
  } else if (spec.mode == "full") {
    check_keys(obj, "train_horizon", {"mode"});
  } else if (spec.mode == "steps") {
    check_keys(obj, "train_horizon", {"mode", "steps"});
    spec.steps = integer_at(obj, "steps", "train_horizon", 0);
    if (spec.steps < 1) throw ConfigError("train_horizon.steps must be at least 1");
  } else {
    throw ConfigError("unknown train_horizon mode '" + spec.mode + "'");
  }
  return spec;
}

InferOptions parse_infer(const json& obj) {
  if (!obj.is_object()) throw ConfigError("infer must be an object");
  check_keys(obj, "infer",
             {"max_iters", "kkt_tol", "ridge", "mass_floor", "column_scaling", "trace_target"});
  InferOptions options;
  options.max_iters = integer_at(obj, "max_iters", "infer", options.max_iters);
  options.kkt_tol = number_at(obj, "kkt_tol", "infer", options.kkt_tol);
  options.ridge = number_at(obj, "ridge", "infer", options.ridge);
  options.mass_floor = number_at(obj, "mass_floor", "infer", options.mass_floor);
  options.column_scaling = bool_at(obj, "column_scaling", "infer", options.column_scaling);
  options.trace_target = number_at(obj, "trace_target", "infer", options.trace_target);
  return options;
}

ordered_json signal_json(const SignalSpec& spec) {
  ordered_json doc;
  doc["kind"] = spec.kind;
  if (spec.kind == "impulse") {
    doc["amplitude"] = spec.amplitude;
    doc["width"] = spec.width;
  } else if (spec.kind == "harmonic") {
    doc["amplitude"] = spec.amplitude;
    doc["omega"] = spec.omega;
    doc["phase"] = spec.phase;
  }
  return doc;
}

ordered_json config_json(const PipelineConfig& config) {
  ordered_json doc;
  ordered_json model;
  if (!config.model.path.empty()) {
    model["path"] = config.model.path.string();
  } else {
    model["builtin"] = config.model.builtin;
    if (config.model.builtin == "anchored_chain") {
      model["n_masses"] = config.model.n_masses;
      model["mass"] = config.model.mass;
      model["stiffness"] = config.model.stiffness;
      model["damping"] = config.model.damping;
    } else {
      model["chain_length"] = config.model.chain_length;
      model["mass"] = config.model.mass;
      model["stiffness"] = config.model.stiffness;
      model["damping_alpha"] = config.model.damping_alpha;
      model["damping_beta"] = config.model.damping_beta;
    }
    if (!config.model.load_nodes.empty()) model["load_nodes"] = config.model.load_nodes;
    if (!config.model.output_nodes.empty()) model["output_nodes"] = config.model.output_nodes;
  }
  doc["model"] = model;
  doc["grid"] = {{"t0", config.grid.t0}, {"dt", config.grid.dt}, {"steps", config.grid.steps}};
  doc["training_input"] = signal_json(config.training_input);
  doc["test_input"] = signal_json(config.test_input);
  ordered_json truncation;
  switch (config.truncation.kind) {
    case TruncationRule::Kind::fixed_r:
      truncation["rule"] = "fixed_r";
      truncation["r"] = config.truncation.r;
      break;
    case TruncationRule::Kind::energy_threshold:
      truncation["rule"] = "energy_threshold";
      truncation["tau"] = config.truncation.tau;
      break;
    case TruncationRule::Kind::energy_saturation:
      truncation["rule"] = "energy_saturation";
      truncation["window"] = config.truncation.window;
      truncation["eps"] = config.truncation.eps;
      break;
  }
  doc["truncation"] = truncation;
  ordered_json horizon;
  horizon["mode"] = config.train_horizon.mode;
  if (config.train_horizon.mode == "auto") horizon["fraction"] = config.train_horizon.fraction;
  if (config.train_horizon.mode == "steps") horizon["steps"] = config.train_horizon.steps;
  doc["train_horizon"] = horizon;
  doc["infer"] = {{"max_iters", config.infer.max_iters},
                  {"kkt_tol", config.infer.kkt_tol},
                  {"ridge", config.infer.ridge},
                  {"mass_floor", config.infer.mass_floor},
                  {"column_scaling", config.infer.column_scaling},
                  {"trace_target", config.infer.trace_target}};
  doc["seed"] = config.seed;
  return doc;
}

const fs::path& out_dir(const PipelineConfig& config) {
  if (config.output_dir.empty())
    throw ConfigError("no output directory: set 'output_dir' in the config or pass --out");
  return config.output_dir;
}

void record_config(const PipelineConfig& config) {
  write_file_atomic(out_dir(config) / "config.json", config_json(config).dump(2) + "\n");
}

void require_artifact(const fs::path& probe, const std::string& what, const std::string& stage) {
  if (!fs::exists(probe))
    throw ArtifactError("missing " + what + " in " + probe.parent_path().string() + "; run the " +
                        stage + " stage first");
}

Index read_horizon(const fs::path& dir) {
  const fs::path path = dir / "horizon.json";
  if (!fs::exists(path))
    throw ArtifactError("missing training horizon in " + dir.string() +
                        "; run the infer stage first");
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ArtifactError("cannot parse " + path.string() + ": " + e.what());
  }
  if (!doc.contains("training_steps") || !doc["training_steps"].is_number_integer())
    throw ArtifactError(path.string() + " lacks a 'training_steps' entry");
  return doc["training_steps"].get<Index>();
}

void note(const PipelineConfig& config, const std::string& line) {
  if (config.verbose) std::cout << line << std::endl;
}

}  // namespace

PipelineConfig load_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  check_keys(doc, "config",
             {"model", "grid", "training_input", "test_input", "truncation", "train_horizon",
              "infer", "output_dir", "seed"});
  for (const char* key : {"model", "grid", "training_input", "test_input"})
    if (!doc.contains(key)) throw ConfigError(std::string("config needs a '") + key + "' section");
  PipelineConfig config;
  config.model = parse_model(doc["model"]);
  config.grid = parse_grid(doc["grid"]);
  config.training_input = parse_signal(doc["training_input"], "training_input");
  config.test_input = parse_signal(doc["test_input"], "test_input");
  if (const json* v = find(doc, "truncation")) config.truncation = parse_truncation(*v);
  if (const json* v = find(doc, "train_horizon")) config.train_horizon = parse_horizon(*v);
  if (const json* v = find(doc, "infer")) config.infer = parse_infer(*v);
  if (const json* v = find(doc, "output_dir")) {
    if (!v->is_string()) throw ConfigError("output_dir must be a string");
    config.output_dir = v->get<std::string>();
  }
  if (const json* v = find(doc, "seed")) {
    if (!v->is_number_integer()) throw ConfigError("seed must be an integer");
    config.seed = v->get<long>();
  }
  return config;
}

SecondOrderDAE build_model(const ModelSpec& spec) {
  if (!spec.path.empty()) return load_system(spec.path);
  if (spec.builtin == "anchored_chain")
    return build_anchored_chain(spec.n_masses, spec.mass, spec.stiffness, spec.damping,
                                spec.load_nodes, spec.output_nodes);
  if (spec.builtin == "triple_chain")
    return build_triple_chain(spec.chain_length, spec.mass, spec.stiffness, spec.damping_alpha,
                              spec.damping_beta, spec.load_nodes, spec.output_nodes);
  throw ConfigError("unknown builtin model '" + spec.builtin + "'");
}

InputSignal build_signal(const SignalSpec& spec) {
  if (spec.kind == "zero") return InputSignal::zero();
  if (spec.kind == "impulse") return impulse_signal(spec.amplitude, spec.width);
  if (spec.kind == "harmonic") return harmonic_signal(spec.amplitude, spec.omega, spec.phase);
  throw ConfigError("unknown signal kind '" + spec.kind + "'");
}

Index training_steps(const PipelineConfig& config, const SnapshotSet& train, Index r) {
  const HorizonSpec& spec = config.train_horizon;
  const Index total = train.grid.steps;
  Index steps = total;
  if (spec.mode == "steps") {
    if (spec.steps > total)
      throw ConfigError("train_horizon.steps exceeds the simulated grid (" +
                        std::to_string(total) + " steps)");
    steps = spec.steps;
  } else if (spec.mode == "auto") {
    const Vector norms = train.Y.colwise().norm();
    const double peak = norms.maxCoeff();
    if (peak > 0.0) {
      const double cutoff = spec.fraction * peak;
      Index last = 0;
      for (Index j = 0; j < norms.size(); ++j)
        if (norms[j] >= cutoff) last = j;
      steps = last;
    }
  }
  const Index min_columns = 3 * r + train.U.rows();
  steps = std::max(steps, std::min(min_columns - 1, total));
  return steps;
}

SnapshotSet truncate_columns(const SnapshotSet& snaps, Index steps) {
  if (steps < 0 || steps > snaps.grid.steps)
    throw ConfigError("training window of " + std::to_string(steps) +
                      " steps exceeds the snapshot grid");
  SnapshotSet out;
  out.grid = snaps.grid;
  out.grid.steps = steps;
  const Index cols = steps + 1;
  out.X = snaps.X.leftCols(cols);
  out.Xd = snaps.Xd.leftCols(cols);
  out.Xdd = snaps.Xdd.leftCols(cols);
  out.U = snaps.U.leftCols(cols);
  out.Y = snaps.Y.leftCols(cols);
  out.Lambda = snaps.Lambda.leftCols(cols);
  out.max_hidden_drift = snaps.max_hidden_drift;
  out.max_constraint_residual = snaps.max_constraint_residual;
  return out;
}

void cmd_simulate(const PipelineConfig& config) {
  const fs::path dir = out_dir(config);
  record_config(config);
  const SecondOrderDAE sys = build_model(config.model);
  note(config, "[simulate] n = " + std::to_string(sys.n()) + ", " +
                   std::to_string(config.grid.steps) + " steps");
  const SnapshotSet train = newmark_dae(sys, config.grid, build_signal(config.training_input));
  save_snapshots(dir / "snapshots" / "train", train);
  note(config, "[simulate] training run done, max constraint residual " +
                   format_double(train.max_constraint_residual));
  const SnapshotSet test = newmark_dae(sys, config.grid, build_signal(config.test_input));
  save_snapshots(dir / "snapshots" / "test", test);
  note(config, "[simulate] test run done, max constraint residual " +
                   format_double(test.max_constraint_residual));
}

void cmd_pod(const PipelineConfig& config) {
  const fs::path dir = out_dir(config);
  require_artifact(dir / "snapshots" / "train" / "grid.json", "training snapshots", "simulate");
  const SnapshotSet train = load_snapshots(dir / "snapshots" / "train");
  const SecondOrderDAE sys = build_model(config.model);
  const PodBasis basis = build_basis(train, sys.kind, config.truncation);
  const double compatibility = constraint_compatibility(sys, basis);
  save_basis(dir / "basis", basis);
  ordered_json report;
  report["schema"] = 1;
  report["r"] = basis.r();
  report["source"] = basis.source == PodSource::displacement ? "displacement" : "velocity";
  report["constraint_compatibility"] = compatibility;
  write_file_atomic(dir / "pod.json", report.dump(2) + "\n");
  note(config, "[pod] r = " + std::to_string(basis.r()) + ", constraint compatibility " +
                   format_double(compatibility));
}

void cmd_infer(const PipelineConfig& config) {
  const fs::path dir = out_dir(config);
  require_artifact(dir / "snapshots" / "train" / "grid.json", "training snapshots", "simulate");
  require_artifact(dir / "basis" / "basis.json", "basis", "pod");
  const SnapshotSet train = load_snapshots(dir / "snapshots" / "train");
  const PodBasis basis = load_basis(dir / "basis");
  const SecondOrderDAE sys = build_model(config.model);
  const double compatibility = constraint_compatibility(sys, basis);
  if (compatibility > 1e-8)
    throw Error("basis is not constraint-compatible: ||G Vr||_F/||G||_F = " +
                format_double(compatibility) +
                " exceeds 1e-8; rebuild the basis from constraint-consistent snapshots");
  const Index steps = training_steps(config, train, basis.r());
  ordered_json horizon;
  horizon["schema"] = 1;
  horizon["training_steps"] = steps;
  horizon["columns"] = steps + 1;
  write_file_atomic(dir / "horizon.json", horizon.dump(2) + "\n");
  note(config, "[infer] training window: " + std::to_string(steps + 1) + " of " +
                   std::to_string(train.grid.num_points()) + " columns");
  const CompressedData data = compress(truncate_columns(train, steps), basis);
  ReducedModel rom = infer_dynamics(data, config.infer);
  const OutputFit fit = infer_output(data);
  rom.Cpr = fit.Cpr;
  rom.Cvr = fit.Cvr;
  rom.diagnostics.output_residual = fit.residual;
  rom.diagnostics.output_rank_deficient = fit.rank_deficient;
  save_rom(dir / "rom_inferred", rom);
  note(config, "[infer] " + std::to_string(rom.diagnostics.iterations) +
                   " iterations, objective " + format_double(rom.diagnostics.final_objective));
}

void cmd_rom(const PipelineConfig& config) {
  const fs::path dir = out_dir(config);
  require_artifact(dir / "rom_inferred" / "rom.json", "reduced model", "infer");
  const ReducedModel rom = load_rom(dir / "rom_inferred");
  const Index steps = read_horizon(dir);
  TimeGrid train_grid = config.grid;
  train_grid.steps = steps;
  const RomTrajectory train = newmark_ode(rom, train_grid, build_signal(config.training_input));
  save_rom_trajectory(dir / "rom_traj" / "train", train);
  const RomTrajectory test = newmark_ode(rom, config.grid, build_signal(config.test_input));
  save_rom_trajectory(dir / "rom_traj" / "test", test);
  note(config, "[rom] reduced trajectories written, r = " + std::to_string(rom.r()));
}

void cmd_compare(const PipelineConfig& config) {
  const fs::path dir = out_dir(config);
  require_artifact(dir / "snapshots" / "train" / "grid.json", "training snapshots", "simulate");
  require_artifact(dir / "snapshots" / "test" / "grid.json", "test snapshots", "simulate");
  require_artifact(dir / "basis" / "basis.json", "basis", "pod");
  require_artifact(dir / "rom_inferred" / "rom.json", "reduced model", "infer");
  require_artifact(dir / "rom_traj" / "train" / "grid.json", "reduced trajectories", "rom");
  const SnapshotSet train = load_snapshots(dir / "snapshots" / "train");
  const SnapshotSet test = load_snapshots(dir / "snapshots" / "test");
  const PodBasis basis = load_basis(dir / "basis");
  const ReducedModel rom = load_rom(dir / "rom_inferred");
  const Index steps = read_horizon(dir);
  const RomTrajectory rom_train = load_rom_trajectory(dir / "rom_traj" / "train");
  const RomTrajectory rom_test = load_rom_trajectory(dir / "rom_traj" / "test");
  if (rom_train.grid.steps != steps)
    throw ArtifactError("reduced training trajectory does not match the training horizon; rerun "
                        "the rom stage");
  write_comparison_report(dir / "report", basis, rom, truncate_columns(train, steps), rom_train,
                          test, rom_test);
  note(config, "[compare] report written to " + (dir / "report").string());
}

void cmd_oracle(const PipelineConfig& config) {
  const fs::path dir = out_dir(config);
  require_artifact(dir / "snapshots" / "train" / "grid.json", "training snapshots", "simulate");
  require_artifact(dir / "snapshots" / "test" / "grid.json", "test snapshots", "simulate");
  require_artifact(dir / "basis" / "basis.json", "basis", "pod");
  require_artifact(dir / "rom_inferred" / "rom.json", "reduced model", "infer");
  const SnapshotSet train = load_snapshots(dir / "snapshots" / "train");
  const SnapshotSet test = load_snapshots(dir / "snapshots" / "test");
  const PodBasis basis = load_basis(dir / "basis");
  const ReducedModel inferred = load_rom(dir / "rom_inferred");
  const Index steps = read_horizon(dir);
  const SnapshotSet trimmed = truncate_columns(train, steps);
  const CompressedData data = compress(trimmed, basis);
  const SecondOrderDAE sys = build_model(config.model);
  const ReducedModel intrusive = intrusive_reduce(sys, basis);
  save_rom(dir / "rom_intrusive", intrusive);
  TimeGrid train_grid = config.grid;
  train_grid.steps = steps;
  const InputSignal train_input = build_signal(config.training_input);
  const InputSignal test_input = build_signal(config.test_input);
  const ErrorSeries inferred_train =
      relative_error(trimmed.Y, newmark_ode(inferred, train_grid, train_input).Y, train_grid);
  const ErrorSeries inferred_test =
      relative_error(test.Y, newmark_ode(inferred, config.grid, test_input).Y, config.grid);
  const ErrorSeries intrusive_train =
      relative_error(trimmed.Y, newmark_ode(intrusive, train_grid, train_input).Y, train_grid);
  const ErrorSeries intrusive_test =
      relative_error(test.Y, newmark_ode(intrusive, config.grid, test_input).Y, config.grid);
  ordered_json doc;
  doc["schema"] = 1;
  doc["r"] = basis.r();
  doc["training_steps"] = steps;
  doc["constraint_compatibility"] = constraint_compatibility(sys, basis);
  doc["max_constraint_residual"] =
      std::max(train.max_constraint_residual, test.max_constraint_residual);
  ordered_json inf;
  inf["objective"] = dynamics_objective(inferred, data);
  inf["max_training_error"] = inferred_train.max_eps;
  inf["max_test_error"] = inferred_test.max_eps;
  doc["inferred"] = inf;
  ordered_json intr;
  intr["objective"] = dynamics_objective(intrusive, data);
  intr["max_training_error"] = intrusive_train.max_eps;
  intr["max_test_error"] = intrusive_test.max_eps;
  doc["intrusive"] = intr;
  write_file_atomic(dir / "oracle.json", doc.dump(2) + "\n");
  note(config, "[oracle] objective      inferred " + format_double(inf["objective"].get<double>()) +
                   "  intrusive " + format_double(intr["objective"].get<double>()));
  note(config, "[oracle] max test error inferred " + format_double(inferred_test.max_eps) +
                   "  intrusive " + format_double(intrusive_test.max_eps));
}

void cmd_pipeline(const PipelineConfig& config) {
  cmd_simulate(config);
  cmd_pod(config);
  cmd_infer(config);
  cmd_rom(config);
  cmd_compare(config);
  cmd_oracle(config);
}

void run_stage(const std::string& name, const PipelineConfig& config) {
  if (name == "simulate")
    cmd_simulate(config);
  else if (name == "pod")
    cmd_pod(config);
  else if (name == "infer")
    cmd_infer(config);
  else if (name == "rom")
    cmd_rom(config);
  else if (name == "compare")
    cmd_compare(config);
  else if (name == "oracle")
    cmd_oracle(config);
  else if (name == "pipeline")
    cmd_pipeline(config);
  else
    throw ConfigError("unknown command '" + name + "'");
}

}  // namespace opinf
