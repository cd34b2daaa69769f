#pragma once

#include <filesystem>
#include <string>

#include "opinf/daesolve.hpp"
#include "opinf/inference.hpp"
#include "opinf/numkernel.hpp"
#include "opinf/podspace.hpp"
#include "opinf/romsolve.hpp"

namespace opinf {

struct ErrorSeries {
  Vector times;
  Vector eps_y;
  double max_eps = 0.0;
  double normalization = 0.0;
};

/// eps_y(t_i) = ||y(t_i) - yhat(t_i)||_2^2 / max_t ||y(t)||_2^2, the squared
/// per-instant output deviation normalized by the largest squared reference
/// output over the horizon.
ErrorSeries relative_error(const Matrix& y_fom, const Matrix& y_rom, const TimeGrid& grid);

std::string error_series_csv(const ErrorSeries& series);

/// One CSV per output channel with the reference and reduced responses side
/// by side.
std::string paired_output_csv(const TimeGrid& grid, const Matrix& y_fom, const Matrix& y_rom,
                              Index channel);

/// Writes the comparison bundle: singular value decay, per-channel output
/// overlays, error series for both phases, a machine-readable summary, and a
/// gnuplot script that renders the standard figures from those CSVs.
void write_comparison_report(const std::filesystem::path& dir, const PodBasis& basis,
                             const ReducedModel& rom, const SnapshotSet& fom_train,
                             const RomTrajectory& rom_train, const SnapshotSet& fom_test,
                             const RomTrajectory& rom_test);

}  // namespace opinf
