#pragma once

#include <filesystem>
#include <string>

#include "opinf/daesolve.hpp"
#include "opinf/models.hpp"
#include "opinf/numkernel.hpp"

namespace opinf {

enum class PodSource { displacement, velocity };

struct TruncationRule {
  enum class Kind { fixed_r, energy_threshold, energy_saturation };
  Kind kind = Kind::energy_saturation;
  Index r = 0;
  double tau = 0.0;
  Index window = 5;
  double eps = 1e-6;

  static TruncationRule fixed(Index r);
  static TruncationRule threshold(double tau);
  static TruncationRule saturation(Index window = 5, double eps = 1e-6);
};

struct PodBasis {
  Matrix Vr;
  Vector singular_values;
  Vector cum_energy;
  PodSource source = PodSource::displacement;

  Index r() const { return Vr.cols(); }
  Index n() const { return Vr.rows(); }
};

struct CompressedData {
  Matrix Xr;
  Matrix Xdr;
  Matrix Xddr;
  Matrix U;
  Matrix Y;
  PodBasis basis;

  Index r() const { return Xr.rows(); }
  Index columns() const { return Xr.cols(); }
};

/// SVD of the displacement snapshots (position constraints) or velocity
/// snapshots (velocity constraints), truncated by `rule`. Cumulative energy is
/// the running sum of singular values over their total; its final entry is 1.
/// With `center` set the column mean is removed before the SVD.
PodBasis build_basis(const SnapshotSet& snaps, ConstraintKind kind, const TruncationRule& rule,
                     bool center = false);

/// ‖G Vr‖_F / ‖G‖_F; small iff the basis inherits the constraint.
double constraint_compatibility(const SecondOrderDAE& sys, const PodBasis& basis);

CompressedData compress(const SnapshotSet& snaps, const PodBasis& basis);

/// CSV with header index,sigma,cum_energy, one row per singular value.
std::string singular_value_csv(const PodBasis& basis);

void save_basis(const std::filesystem::path& dir, const PodBasis& basis);
PodBasis load_basis(const std::filesystem::path& dir);

}  // namespace opinf
