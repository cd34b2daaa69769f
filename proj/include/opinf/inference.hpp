#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "opinf/errors.hpp"
#include "opinf/models.hpp"
#include "opinf/numkernel.hpp"
#include "opinf/podspace.hpp"

namespace opinf {

enum class Provenance { inferred, intrusive };

struct SolveReport {
  std::vector<double> objective;
  double final_objective = 0.0;
  double projected_gradient_norm = 0.0;
  double gradient_scale = 0.0;
  Index iterations = 0;
  std::string termination;
  double min_eig_m = 0.0;
  double min_eig_d = 0.0;
  double min_eig_k = 0.0;
  bool rank_deficient_data = false;
  bool mass_floor_applied = false;
  bool column_scaling = true;
  double output_residual = 0.0;
  bool output_rank_deficient = false;
};

struct ReducedModel {
  Matrix Mr;
  Matrix Dr;
  Matrix Kr;
  Matrix Br;
  Matrix Cpr;
  Matrix Cvr;
  Provenance provenance = Provenance::inferred;
  SolveReport diagnostics;

  Index r() const { return Mr.rows(); }
  Index num_inputs() const { return Br.cols(); }
  Index num_outputs() const { return Cpr.rows(); }
};

struct InferOptions {
  Index max_iters = 5000;
  double kkt_tol = 1e-8;
  double ridge = 1e-10;
  double mass_floor = 1e-8;
  bool column_scaling = true;
  /// Trace prescribed for the learned mass operator; 0 selects r. The fit
  /// problem is invariant under a joint rescaling of (Mr, Dr, Kr, Br), so one
  /// normalization must be pinned for the minimizer to be unique.
  double trace_target = 0.0;
};

class InferenceConvergenceError : public ConvergenceError {
 public:
  InferenceConvergenceError(const std::string& what, SolveReport report)
      : ConvergenceError(what, report.iterations), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

/// Fits symmetric PSD (Mr, Dr, Kr) and unconstrained Br to the compressed
/// trajectory data by monotone projected accelerated gradient descent on
/// ‖Mr Xddr + Dr Xdr + Kr Xr - Br U‖²_F plus a small relative ridge, with
/// tr(Mr) pinned to the trace target. Output matrices are left zero; see
/// infer_output.
ReducedModel infer_dynamics(const CompressedData& data, const InferOptions& options = {});

struct OutputFit {
  Matrix Cpr;
  Matrix Cvr;
  double residual = 0.0;
  bool rank_deficient = false;
};

/// Least-squares fit of ‖Cvr Xdr + Cpr Xr - Y‖_F, minimum-norm when the
/// stacked state data is rank-deficient (flagged).
OutputFit infer_output(const CompressedData& data);

/// Galerkin congruence: Mr = Vrᵀ M Vr and so on. Serves as the reference
/// reduction the learned operators are checked against.
ReducedModel intrusive_reduce(const SecondOrderDAE& sys, const PodBasis& basis);

/// ‖Mr Xddr + Dr Xdr + Kr Xr - Br U‖²_F without any regularization.
double dynamics_objective(const ReducedModel& rom, const CompressedData& data);

void save_rom(const std::filesystem::path& dir, const ReducedModel& rom);
ReducedModel load_rom(const std::filesystem::path& dir);

}  // namespace opinf
