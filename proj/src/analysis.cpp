#include "opinf/analysis.hpp"

#include <json.hpp>

#include "opinf/matrixmarket.hpp"

namespace opinf {

namespace {

std::string provenance_name(Provenance p) {
  return p == Provenance::inferred ? "inferred" : "intrusive";
}

}  // namespace

ErrorSeries relative_error(const Matrix& y_fom, const Matrix& y_rom, const TimeGrid& grid) {
  if (y_fom.rows() != y_rom.rows() || y_fom.cols() != y_rom.cols()) {
    throw Error("output trajectories have different shapes");
  }
  if (y_fom.cols() != grid.num_points()) {
    throw Error("output columns disagree with the time grid");
  }
  require_finite(y_fom, "reference outputs");
  require_finite(y_rom, "reduced outputs");

  const Index count = y_fom.cols();
  ErrorSeries series;
  series.normalization = y_fom.colwise().squaredNorm().maxCoeff();
  if (!(series.normalization > 0.0)) {
    throw Error("reference output is identically zero, relative error undefined");
  }
  series.times.resize(count);
  for (Index j = 0; j < count; ++j) series.times[j] = grid.time(j);
  series.eps_y =
      (y_fom - y_rom).colwise().squaredNorm().transpose() / series.normalization;
  series.max_eps = series.eps_y.maxCoeff();
  return series;
}

std::string error_series_csv(const ErrorSeries& series) {
  std::string out = "t,eps_y\n";
  for (Index j = 0; j < series.times.size(); ++j) {
    out += format_double(series.times[j]) + ',' + format_double(series.eps_y[j]) + '\n';
  }
  return out;
}

std::string paired_output_csv(const TimeGrid& grid, const Matrix& y_fom, const Matrix& y_rom,
                              Index channel) {
  if (channel < 0 || channel >= y_fom.rows() || y_fom.rows() != y_rom.rows()) {
    throw Error("output channel out of range");
  }
  std::string out = "t,y_fom,y_rom\n";
  for (Index j = 0; j < grid.num_points(); ++j) {
    out += format_double(grid.time(j)) + ',' + format_double(y_fom(channel, j)) + ',' +
           format_double(y_rom(channel, j)) + '\n';
  }
  return out;
}

void write_comparison_report(const std::filesystem::path& dir, const PodBasis& basis,
                             const ReducedModel& rom, const SnapshotSet& fom_train,
                             const RomTrajectory& rom_train, const SnapshotSet& fom_test,
                             const RomTrajectory& rom_test) {
  std::filesystem::create_directories(dir);

  const ErrorSeries train = relative_error(fom_train.Y, rom_train.Y, fom_train.grid);
  const ErrorSeries test = relative_error(fom_test.Y, rom_test.Y, fom_test.grid);

  write_file_atomic(dir / "energy.csv", singular_value_csv(basis));
  write_file_atomic(dir / "train_error.csv", error_series_csv(train));
  write_file_atomic(dir / "test_error.csv", error_series_csv(test));

  const Index channels = fom_train.Y.rows();
  for (Index c = 0; c < channels; ++c) {
    const std::string suffix = std::to_string(c + 1) + ".csv";
    write_file_atomic(dir / ("train_output_" + suffix),
                      paired_output_csv(fom_train.grid, fom_train.Y, rom_train.Y, c));
    write_file_atomic(dir / ("test_output_" + suffix),
                      paired_output_csv(fom_test.grid, fom_test.Y, rom_test.Y, c));
  }

  const SolveReport& d = rom.diagnostics;
  nlohmann::ordered_json summary;
  summary["schema"] = 1;
  summary["r"] = rom.r();
  summary["provenance"] = provenance_name(rom.provenance);
  summary["max_training_error"] = train.max_eps;
  summary["max_test_error"] = test.max_eps;
  summary["training_normalization"] = train.normalization;
  summary["test_normalization"] = test.normalization;
  nlohmann::ordered_json solver;
  solver["iterations"] = d.iterations;
  solver["termination"] = d.termination;
  solver["final_objective"] = d.final_objective;
  solver["projected_gradient_norm"] = d.projected_gradient_norm;
  solver["min_eig_m"] = d.min_eig_m;
  solver["min_eig_d"] = d.min_eig_d;
  solver["min_eig_k"] = d.min_eig_k;
  solver["rank_deficient_data"] = d.rank_deficient_data;
  solver["mass_floor_applied"] = d.mass_floor_applied;
  solver["column_scaling"] = d.column_scaling;
  solver["output_residual"] = d.output_residual;
  solver["output_rank_deficient"] = d.output_rank_deficient;
  summary["solver"] = solver;
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");

  std::string gp;
  gp += "set datafile separator ','\n";
  gp += "set terminal pngcairo size 1200,500\n";
  gp += "set key top right\n";
  gp += "set output 'energy.png'\n";
  gp += "set logscale y\n";
  gp += "plot 'energy.csv' using 1:2 with linespoints title 'singular values'\n";
  gp += "set output 'errors.png'\n";
  gp += "plot 'train_error.csv' using 1:2 with lines title 'training', \\\n";
  gp += "     'test_error.csv' using 1:2 with lines title 'test'\n";
  gp += "unset logscale y\n";
  for (Index c = 0; c < channels; ++c) {
    const std::string n = std::to_string(c + 1);
    gp += "set output 'test_output_" + n + ".png'\n";
    gp += "plot 'test_output_" + n + ".csv' using 1:2 with lines title 'full model', \\\n";
    gp += "     'test_output_" + n + ".csv' using 1:3 with lines title 'reduced model'\n";
  }
  write_file_atomic(dir / "plots.gp", gp);
}

}  // namespace opinf
