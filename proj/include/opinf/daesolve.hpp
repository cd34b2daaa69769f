#pragma once

#include <filesystem>
#include <string>

#include "opinf/models.hpp"
#include "opinf/numkernel.hpp"
#include "opinf/signals.hpp"

namespace opinf {

struct TimeGrid {
  double t0 = 0.0;
  double dt = 1e-2;
  Index steps = 2000;

  Index num_points() const { return steps + 1; }
  double time(Index j) const { return t0 + dt * static_cast<double>(j); }
};

void validate_grid(const TimeGrid& grid);

/// Column j of every matrix belongs to time grid.time(j).
struct SnapshotSet {
  TimeGrid grid;
  Matrix X;
  Matrix Xd;
  Matrix Xdd;
  Matrix U;
  Matrix Y;
  Matrix Lambda;
  /// Largest hidden velocity-constraint violation seen (position kind only).
  double max_hidden_drift = 0.0;
  /// Largest enforced constraint residual relative to the state magnitude.
  double max_constraint_residual = 0.0;
};

struct InitialState {
  Vector x;
  Vector v;
  Vector a;
  Vector lambda;
};

/// Projects the initial state onto the constraint manifold (positions and
/// velocities for position constraints, velocities only for velocity
/// constraints) and solves for a consistent initial acceleration and
/// multiplier: M a + Gᵀ lambda = B u0 - D v - K x with G a = 0.
InitialState consistent_initialize(const SecondOrderDAE& sys, const Vector& x0, const Vector& v0,
                                   const Vector& u0);

struct NewmarkOptions {
  double beta = 0.25;
  double gamma = 0.5;
  Vector x0;
  Vector v0;
  bool project_hidden_velocity = false;
};

/// Newmark integration of the constrained system. Each step solves one
/// saddle-point system in (acceleration, multiplier) so the updated position
/// (position kind) or velocity (velocity kind) satisfies its constraint to
/// 1e-9 relative; a larger residual aborts with the step index.
SnapshotSet newmark_dae(const SecondOrderDAE& sys, const TimeGrid& grid, const InputSignal& input,
                        const NewmarkOptions& options = {});

/// CSV with header t,y_1..y_p,u_1..u_m and one row per grid point.
std::string trajectory_csv(const SnapshotSet& snaps);

void save_snapshots(const std::filesystem::path& dir, const SnapshotSet& snaps);
SnapshotSet load_snapshots(const std::filesystem::path& dir);

}  // namespace opinf
