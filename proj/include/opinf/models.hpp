#pragma once

#include <filesystem>
#include <vector>

#include "opinf/numkernel.hpp"

namespace opinf {

enum class ConstraintKind { position, velocity };

/// Linear second-order system M x'' + D x' + K x + Gᵀ lambda = B u with a
/// holonomic constraint G x = 0 (position kind) or G x' = 0 (velocity kind)
/// and outputs y = Cp x + Cv x'.
struct SecondOrderDAE {
  Matrix M;
  Matrix D;
  Matrix K;
  ConstraintKind kind = ConstraintKind::position;
  Matrix G;
  Matrix B;
  Matrix Cp;
  Matrix Cv;

  Index n() const { return M.rows(); }
  Index num_constraints() const { return G.rows(); }
  Index num_inputs() const { return B.cols(); }
  Index num_outputs() const { return Cp.rows(); }
};

/// Checks shapes, finiteness, symmetry (defect ≤ 1e-8 relative), positive
/// definiteness of M and K, positive semidefiniteness of D, and full row rank
/// of G. Throws with the violated property named.
void validate_system(const SecondOrderDAE& sys);

/// Chain of `n_masses` masses, each tied to ground by a spring and damper and
/// to its neighbors (walls at both ends) by identical springs and dampers.
/// A rigid bar links the first and last mass: G = e_1ᵀ - e_nᵀ, position kind.
/// Empty node lists select the defaults (one interior load node, three spread
/// output displacements).
SecondOrderDAE build_anchored_chain(Index n_masses, double mass, double stiffness,
                                    double damping, std::vector<Index> load_nodes = {},
                                    std::vector<Index> output_nodes = {});

/// Three identical chains of `chain_length` masses, each anchored to a wall at
/// one end and coupled to a shared mass at the other; n = 3*chain_length + 1.
/// Rayleigh damping D = alpha M + beta K. Two velocity-constraint rows force
/// the three chain endpoints adjacent to the shared mass to move in unison.
/// Outputs are node velocities: by default one mid-chain node and the shared
/// mass.
SecondOrderDAE build_triple_chain(Index chain_length, double mass, double stiffness,
                                  double damping_alpha, double damping_beta,
                                  std::vector<Index> load_nodes = {},
                                  std::vector<Index> output_nodes = {});

/// Reads a system from a directory holding M.mtx, D.mtx, K.mtx, B.mtx, Cp.mtx,
/// Cv.mtx and exactly one of Gp.mtx / Gv.mtx, then validates it.
SecondOrderDAE load_system(const std::filesystem::path& dir);

/// Inverse of load_system; writes one MatrixMarket file per matrix.
void save_system(const std::filesystem::path& dir, const SecondOrderDAE& sys);

}  // namespace opinf
