#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "opinf/analysis.hpp"
#include "opinf/daesolve.hpp"
#include "opinf/inference.hpp"
#include "opinf/models.hpp"
#include "opinf/podspace.hpp"
#include "opinf/romsolve.hpp"
#include "opinf/signals.hpp"

namespace opinf {

struct ModelSpec {
  std::string builtin;
  std::filesystem::path path;
  Index n_masses = 600;
  Index chain_length = 100;
  double mass = 100.0;
  double stiffness = 2.0;
  double damping = 5.0;
  double damping_alpha = 0.01;
  double damping_beta = 0.01;
  std::vector<Index> load_nodes;
  std::vector<Index> output_nodes;
};

struct SignalSpec {
  std::string kind = "zero";
  double amplitude = 1.0;
  double width = 1.0;
  double omega = 1.0;
  double phase = 0.0;
};

/// Training-window selection: "auto" keeps columns through the last instant
/// whose output 2-norm still reaches the given fraction of the peak, "full"
/// keeps everything, "steps" pins the count explicitly.
struct HorizonSpec {
  std::string mode = "auto";
  double fraction = 0.01;
  Index steps = 0;
};

struct PipelineConfig {
  ModelSpec model;
  TimeGrid grid;
  SignalSpec training_input;
  SignalSpec test_input;
  TruncationRule truncation = TruncationRule::saturation();
  HorizonSpec train_horizon;
  InferOptions infer;
  std::filesystem::path output_dir;
  long seed = 0;
  bool verbose = false;
};

/// Parses and schema-validates a config file; unknown keys anywhere in the
/// document are rejected.
PipelineConfig load_config(const std::filesystem::path& path);

SecondOrderDAE build_model(const ModelSpec& spec);
InputSignal build_signal(const SignalSpec& spec);

/// Length of the training window per the horizon rule, expressed as a step
/// count; never below the column count the operator fit requires.
Index training_steps(const PipelineConfig& config, const SnapshotSet& train, Index r);

SnapshotSet truncate_columns(const SnapshotSet& snaps, Index steps);

void cmd_simulate(const PipelineConfig& config);
void cmd_pod(const PipelineConfig& config);
void cmd_infer(const PipelineConfig& config);
void cmd_rom(const PipelineConfig& config);
void cmd_compare(const PipelineConfig& config);
void cmd_oracle(const PipelineConfig& config);
void cmd_pipeline(const PipelineConfig& config);

/// Dispatches one of the stage commands by name.
void run_stage(const std::string& name, const PipelineConfig& config);

}  // namespace opinf
