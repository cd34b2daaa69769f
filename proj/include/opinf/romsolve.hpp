#pragma once

#include <filesystem>
#include <string>
#include <utility>

#include "opinf/daesolve.hpp"
#include "opinf/inference.hpp"
#include "opinf/numkernel.hpp"
#include "opinf/podspace.hpp"
#include "opinf/signals.hpp"

namespace opinf {

struct RomTrajectory {
  TimeGrid grid;
  Matrix Xr;
  Matrix Xdr;
  Matrix U;
  Matrix Y;
};

struct OdeOptions {
  double beta = 0.25;
  double gamma = 0.5;
  Vector x0;
  Vector v0;
};

/// Classical Newmark recursion on the reduced second-order system, no
/// constraint block; the initial acceleration solves
/// Mr a0 = Br u(t0) - Dr v0 - Kr x0.
RomTrajectory newmark_ode(const ReducedModel& rom, const TimeGrid& grid, const InputSignal& input,
                          const OdeOptions& options = {});

/// (Vr^T x0, Vr^T v0)
std::pair<Vector, Vector> initial_reduced_state(const PodBasis& basis, const Vector& x0_full,
                                                const Vector& v0_full);

/// Same column layout as the full-order trajectory file, so the two can be
/// diffed column by column.
std::string rom_trajectory_csv(const RomTrajectory& traj);

void save_rom_trajectory(const std::filesystem::path& dir, const RomTrajectory& traj);
RomTrajectory load_rom_trajectory(const std::filesystem::path& dir);

}  // namespace opinf
