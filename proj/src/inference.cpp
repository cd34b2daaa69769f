#include "opinf/inference.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <json.hpp>

#include "opinf/matrixmarket.hpp"

namespace opinf {

namespace {

double block_scale(const Matrix& a, bool enabled) {
  if (!enabled) return 1.0;
  const double norm = a.norm();
  return norm > 0.0 ? norm : 1.0;
}

Matrix project_feasible(const Matrix& theta, Index r, double trace_scaled) {
  Matrix out = theta;
  out.block(0, 0, r, r) = psd_project_with_trace(theta.block(0, 0, r, r), trace_scaled);
  out.block(0, r, r, r) = psd_project(theta.block(0, r, r, r));
  out.block(0, 2 * r, r, r) = psd_project(theta.block(0, 2 * r, r, r));
  return out;
}

double objective_value(const Matrix& theta, const Matrix& p_reg) {
  return (theta * p_reg).cwiseProduct(theta).sum();
}

struct BasisTerm {
  Index left = 0;
  Index right = 0;
  double weight = 1.0;
};

struct BasisElement {
  BasisTerm t0;
  BasisTerm t1;
  int terms = 1;
  bool diagonal = false;
};

/// Minimizer of tr(Theta P Theta^T) over Theta = [Vm Ym Vm^T, Vd Yd Vd^T,
/// Vk Yk Vk^T, B] with symmetric Y blocks and tr(Ym) pinned, semidefiniteness
/// dropped. Whenever the result happens to be feasible for the cone
/// constraints it is the exact solution of the full fit, so this serves both
/// as the warm start and as the polish step on an active face.
Matrix anchored_equality_solve(const Matrix& p_reg, Index r, Index m, double trace_scaled,
                               const Matrix& vm, const Matrix& vd, const Matrix& vk) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const std::array<Matrix, 4> lmap = {vm, vd, vk, Matrix::Identity(r, r)};
  const std::array<Matrix, 4> rmap = {vm, vd, vk, Matrix::Identity(m, m)};
  const std::array<Index, 4> offset = {0, r, 2 * r, 3 * r};
  const std::array<Index, 4> width = {r, r, r, m};

  std::array<std::vector<BasisElement>, 4> basis;
  for (int b = 0; b < 3; ++b) {
    const Index q = lmap[static_cast<std::size_t>(b)].cols();
    for (Index i = 0; i < q; ++i) {
      BasisElement diag;
      diag.t0 = {i, i, 1.0};
      diag.diagonal = true;
      basis[static_cast<std::size_t>(b)].push_back(diag);
      for (Index j = i + 1; j < q; ++j) {
        BasisElement off;
        off.t0 = {i, j, inv_sqrt2};
        off.t1 = {j, i, inv_sqrt2};
        off.terms = 2;
        basis[static_cast<std::size_t>(b)].push_back(off);
      }
    }
  }
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < r; ++i) {
      BasisElement e;
      e.t0 = {i, j, 1.0};
      basis[3].push_back(e);
    }

  std::array<Index, 4> first{};
  Index dim = 0;
  for (std::size_t b = 0; b < 4; ++b) {
    first[b] = dim;
    dim += static_cast<Index>(basis[b].size());
  }

  Matrix phat[4][4];
  Matrix ghat[4][4];
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t c = 0; c < 4; ++c) {
      phat[b][c] = rmap[b].transpose() *
                   p_reg.block(offset[b], offset[c], width[b], width[c]) * rmap[c];
      ghat[b][c] = lmap[b].transpose() * lmap[c];
    }

  Matrix h = Matrix::Zero(dim, dim);
  Vector anchor = Vector::Zero(dim);
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t kb = 0; kb < basis[b].size(); ++kb) {
      const Index row = first[b] + static_cast<Index>(kb);
      const BasisElement& e = basis[b][kb];
      if (b == 0 && e.diagonal) anchor[row] = 1.0;
      for (std::size_t c = 0; c < 4; ++c) {
        for (std::size_t kc = 0; kc < basis[c].size(); ++kc) {
          const Index col = first[c] + static_cast<Index>(kc);
          if (col < row) continue;
          const BasisElement& f = basis[c][kc];
          double sum = 0.0;
          for (int s = 0; s < e.terms; ++s) {
            const BasisTerm& ts = s == 0 ? e.t0 : e.t1;
            for (int t = 0; t < f.terms; ++t) {
              const BasisTerm& tt = t == 0 ? f.t0 : f.t1;
              sum += ts.weight * tt.weight * phat[b][c](ts.right, tt.right) *
                     ghat[c][b](tt.left, ts.left);
            }
          }
          h(row, col) = 2.0 * sum;
          h(col, row) = h(row, col);
        }
      }
    }
  }

  SpdSolver hsolver(h);
  const Vector w = hsolver.solve(anchor);
  const double denom = anchor.dot(w);
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    throw Error("anchored operator fit is degenerate");
  }
  const Vector coeff = (trace_scaled / denom) * w;

  Matrix theta = Matrix::Zero(r, 3 * r + m);
  for (std::size_t b = 0; b < 3; ++b) {
    const Index q = lmap[b].cols();
    if (q == 0) continue;
    Matrix y = Matrix::Zero(q, q);
    for (std::size_t kb = 0; kb < basis[b].size(); ++kb) {
      const BasisElement& e = basis[b][kb];
      const double c = coeff[first[b] + static_cast<Index>(kb)];
      y(e.t0.left, e.t0.right) += c * e.t0.weight;
      if (e.terms == 2) y(e.t1.left, e.t1.right) += c * e.t1.weight;
    }
    theta.block(0, offset[b], r, r) = lmap[b] * y * lmap[b].transpose();
  }
  for (std::size_t kb = 0; kb < basis[3].size(); ++kb) {
    const BasisElement& e = basis[3][kb];
    theta(e.t0.left, offset[3] + e.t0.right) = coeff[first[3] + static_cast<Index>(kb)];
  }
  return theta;
}

/// Orthonormal eigenvectors whose eigenvalues clear a relative cutoff; the
/// span the block is allowed to act on during a polish solve. keep_top
/// guarantees a nonempty face for the trace-pinned mass block.
Matrix positive_face(const Matrix& block, bool keep_top) {
  const EigResult eig = sym_eig(block);
  const double lam_max = eig.values.size() > 0 ? eig.values.maxCoeff() : 0.0;
  const double cut = 1e-7 * std::max(lam_max, 0.0);
  std::vector<Index> keep;
  for (Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values[i] > cut && eig.values[i] > 0.0) keep.push_back(i);
  }
  if (keep.empty() && keep_top && eig.values.size() > 0) keep.push_back(eig.values.size() - 1);
  Matrix v(block.rows(), static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    v.col(static_cast<Index>(i)) = eig.q.col(keep[i]);
  }
  return v;
}

/// Active-set refinement. Repeatedly solves the trace-anchored fit restricted
/// to the positive faces of the current blocks, shrinks each face to the
/// positive part of that solution, and, once the on-face minimizer is
/// positive semidefinite, expands along directions where the dual slack
/// (the symmetric gradient on the face complement) fails to be positive
/// semidefinite. At a fixed point the cone conditions hold exactly.
Matrix face_polish(const Matrix& theta, const Matrix& p_reg, Index r, Index m,
                   double trace_scaled) {
  std::array<Matrix, 3> face = {positive_face(theta.block(0, 0, r, r), true),
                                positive_face(theta.block(0, r, r, r), false),
                                positive_face(theta.block(0, 2 * r, r, r), false)};
  Matrix sol = anchored_equality_solve(p_reg, r, m, trace_scaled, face[0], face[1], face[2]);
  for (int round = 0; round < 8; ++round) {
    const std::array<Matrix, 3> shrunk = {positive_face(sol.block(0, 0, r, r), true),
                                          positive_face(sol.block(0, r, r, r), false),
                                          positive_face(sol.block(0, 2 * r, r, r), false)};
    if (shrunk[0].cols() != face[0].cols() || shrunk[1].cols() != face[1].cols() ||
        shrunk[2].cols() != face[2].cols()) {
      face = shrunk;
      sol = anchored_equality_solve(p_reg, r, m, trace_scaled, face[0], face[1], face[2]);
      continue;
    }
    const Matrix grad = 2.0 * sol * p_reg;
    bool expanded = false;
    for (int b = 0; b < 3; ++b) {
      const Matrix gb = grad.block(0, b * r, r, r);
      Matrix slack = 0.5 * (gb + gb.transpose());
      if (b == 0 && face[0].cols() > 0) {
        const double mu = (face[0].transpose() * slack * face[0]).trace() /
                          static_cast<double>(face[0].cols());
        slack -= mu * Matrix::Identity(r, r);
      }
      const Matrix q = Matrix::Identity(r, r) - face[b] * face[b].transpose();
      const Matrix complement = 0.5 * (q * slack * q + (q * slack * q).transpose());
      const EigResult eig = sym_eig(complement);
      const double scale = std::max(slack.norm(), 1e-300);
      std::vector<Index> grow;
      for (Index i = 0; i < eig.values.size(); ++i)
        if (eig.values[i] < -1e-8 * scale) grow.push_back(i);
      if (!grow.empty()) {
        Matrix wider(r, face[b].cols() + static_cast<Index>(grow.size()));
        wider.leftCols(face[b].cols()) = face[b];
        for (std::size_t i = 0; i < grow.size(); ++i)
          wider.col(face[b].cols() + static_cast<Index>(i)) = eig.q.col(grow[i]);
        face[b] = wider;
        expanded = true;
      }
    }
    if (!expanded) break;
    sol = anchored_equality_solve(p_reg, r, m, trace_scaled, face[0], face[1], face[2]);
  }
  return sol;
}

void check_options(const InferOptions& options) {
  if (options.max_iters < 1) throw Error("max_iters must be at least 1");
  if (options.kkt_tol < 0.0 || options.ridge < 0.0 || options.mass_floor < 0.0 ||
      options.trace_target < 0.0) {
    throw Error("inference options must be nonnegative");
  }
}

std::string provenance_name(Provenance p) {
  return p == Provenance::inferred ? "inferred" : "intrusive";
}

}  // namespace

ReducedModel infer_dynamics(const CompressedData& data, const InferOptions& options) {
  check_options(options);
  const Index r = data.r();
  const Index m = data.U.rows();
  const Index k = data.columns();
  if (r < 1) throw Error("compressed data is empty");
  if (data.Xdr.rows() != r || data.Xddr.rows() != r) throw Error("compressed row counts disagree");
  if (data.Xdr.cols() != k || data.Xddr.cols() != k || data.U.cols() != k) {
    throw Error("compressed column counts disagree");
  }
  if (k < 3 * r + m) {
    throw Error("need at least " + std::to_string(3 * r + m) + " data columns, have " +
                std::to_string(k));
  }
  require_finite(data.Xr, "reduced displacements");
  require_finite(data.Xdr, "reduced velocities");
  require_finite(data.Xddr, "reduced accelerations");
  require_finite(data.U, "inputs");

  ReducedModel rom;
  rom.provenance = Provenance::inferred;
  rom.diagnostics.column_scaling = options.column_scaling;
  rom.Cpr = Matrix::Zero(data.Y.rows(), r);
  rom.Cvr = Matrix::Zero(data.Y.rows(), r);

  const double sa = block_scale(data.Xddr, options.column_scaling);
  const double sv = block_scale(data.Xdr, options.column_scaling);
  const double sx = block_scale(data.Xr, options.column_scaling);
  const double su = block_scale(data.U, options.column_scaling);

  Matrix z(3 * r + m, k);
  z.topRows(r) = data.Xddr / sa;
  z.middleRows(r, r) = data.Xdr / sv;
  z.middleRows(2 * r, r) = data.Xr / sx;
  z.bottomRows(m) = -data.U / su;

  if (z.norm() == 0.0) {
    rom.Mr = Matrix::Zero(r, r);
    rom.Dr = Matrix::Zero(r, r);
    rom.Kr = Matrix::Zero(r, r);
    rom.Br = Matrix::Zero(r, m);
    rom.diagnostics.termination = "zero data";
    rom.diagnostics.objective = {0.0};
    return rom;
  }

  Matrix p = z * z.transpose();
  p = 0.5 * (p + p.transpose()).eval();
  auto p_eig = sym_eig(p);
  const double lam_max = p_eig.values.maxCoeff();
  const double lam_min = p_eig.values.minCoeff();

  double ridge = options.ridge * p.trace() / static_cast<double>(k);
  if (lam_min < 1e-12 * lam_max) {
    ridge = std::max(ridge, 1e-12 * lam_max);
    rom.diagnostics.rank_deficient_data = true;
  }
  const Matrix p_reg = p + ridge * Matrix::Identity(p.rows(), p.cols());
  const double step_l = 2.0 * (lam_max + ridge);

  const double trace_target = options.trace_target > 0.0 ? options.trace_target
                                                         : static_cast<double>(r);
  const double trace_scaled = trace_target * sa;

  const Matrix eye_r = Matrix::Identity(r, r);
  Matrix theta = project_feasible(
      anchored_equality_solve(p_reg, r, m, trace_scaled, eye_r, eye_r, eye_r), r, trace_scaled);

  const auto stationarity = [&](const Matrix& th) {
    return (th - project_feasible(th - (2.0 / step_l) * (th * p_reg), r, trace_scaled)).norm() *
           step_l;
  };

  const double grad0 = (2.0 * theta * p_reg).norm();
  const double scale0 = std::max(grad0, step_l * theta.norm());
  const double crit_tol = options.kkt_tol * (1.0 + scale0);
  rom.diagnostics.gradient_scale = scale0;

  double f_curr = objective_value(theta, p_reg);
  rom.diagnostics.objective.push_back(f_curr);
  double crit = stationarity(theta);
  bool converged = crit <= crit_tol;

  Matrix y = theta;
  double momentum = 1.0;
  Index iter = 0;
  Index next_polish = 64;
  Index last_polish = 0;
  Index last_progress = 0;
  double best_crit = crit;
  while (!converged && iter < options.max_iters) {
    ++iter;
    bool polish = false;
    if (iter == next_polish) {
      next_polish *= 2;
      polish = true;
    } else if (iter - last_polish >= 256 && iter - last_progress >= 256) {
      polish = true;
    }
    if (polish) {
      last_polish = iter;
      try {
        const Matrix polished =
            project_feasible(face_polish(theta, p_reg, r, m, trace_scaled), r, trace_scaled);
        const double f_polished = objective_value(polished, p_reg);
        if (f_polished < f_curr) {
          theta = polished;
          y = polished;
          f_curr = f_polished;
          momentum = 1.0;
        }
      } catch (const Error&) {
      }
    }
    Matrix cand = project_feasible(y - (2.0 / step_l) * (y * p_reg), r, trace_scaled);
    double f_cand = objective_value(cand, p_reg);
    if (f_cand > f_curr) {
      cand = project_feasible(theta - (2.0 / step_l) * (theta * p_reg), r, trace_scaled);
      f_cand = objective_value(cand, p_reg);
      momentum = 1.0;
    }
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = cand + ((momentum - 1.0) / momentum_next) * (cand - theta);
    theta = cand;
    f_curr = f_cand;
    momentum = momentum_next;
    rom.diagnostics.objective.push_back(f_curr);

    crit = stationarity(theta);
    if (crit <= 0.5 * best_crit) {
      best_crit = crit;
      last_progress = iter;
    }
    if (crit <= crit_tol) converged = true;
  }

  rom.diagnostics.iterations = iter;
  rom.diagnostics.projected_gradient_norm = crit;
  rom.diagnostics.final_objective = f_curr;

  rom.Mr = theta.block(0, 0, r, r) / sa;
  rom.Dr = theta.block(0, r, r, r) / sv;
  rom.Kr = theta.block(0, 2 * r, r, r) / sx;
  rom.Br = theta.block(0, 3 * r, r, m) / su;

  rom.diagnostics.min_eig_m = sym_eig(rom.Mr).values.minCoeff();
  rom.diagnostics.min_eig_d = sym_eig(rom.Dr).values.minCoeff();
  rom.diagnostics.min_eig_k = sym_eig(rom.Kr).values.minCoeff();

  if (!converged) {
    rom.diagnostics.termination = "max iterations";
    throw InferenceConvergenceError("operator fit did not reach stationarity", rom.diagnostics);
  }
  rom.diagnostics.termination = "stationary";

  if (rom.diagnostics.min_eig_m < options.mass_floor) {
    rom.Mr += (options.mass_floor - rom.diagnostics.min_eig_m) * Matrix::Identity(r, r);
    rom.diagnostics.mass_floor_applied = true;
    rom.diagnostics.min_eig_m = sym_eig(rom.Mr).values.minCoeff();
  }
  return rom;
}

OutputFit infer_output(const CompressedData& data) {
  const Index r = data.r();
  const Index k = data.columns();
  if (data.Y.cols() != k) throw Error("output column count disagrees with the states");
  require_finite(data.Y, "outputs");

  Matrix q(2 * r, k);
  q.topRows(r) = data.Xr;
  q.bottomRows(r) = data.Xdr;

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(q.transpose());
  const Matrix wt = cod.solve(data.Y.transpose());

  OutputFit fit;
  fit.Cpr = wt.topRows(r).transpose();
  fit.Cvr = wt.bottomRows(r).transpose();
  fit.rank_deficient = cod.rank() < 2 * r;
  fit.residual = (q.transpose() * wt - data.Y.transpose()).norm();
  return fit;
}

ReducedModel intrusive_reduce(const SecondOrderDAE& sys, const PodBasis& basis) {
  if (basis.Vr.rows() != sys.n()) throw Error("basis and system dimensions disagree");
  ReducedModel rom;
  rom.provenance = Provenance::intrusive;
  rom.Mr = basis.Vr.transpose() * sys.M * basis.Vr;
  rom.Dr = basis.Vr.transpose() * sys.D * basis.Vr;
  rom.Kr = basis.Vr.transpose() * sys.K * basis.Vr;
  rom.Mr = 0.5 * (rom.Mr + rom.Mr.transpose()).eval();
  rom.Dr = 0.5 * (rom.Dr + rom.Dr.transpose()).eval();
  rom.Kr = 0.5 * (rom.Kr + rom.Kr.transpose()).eval();
  rom.Br = basis.Vr.transpose() * sys.B;
  rom.Cpr = sys.Cp * basis.Vr;
  rom.Cvr = sys.Cv * basis.Vr;
  rom.diagnostics.termination = "congruence";
  rom.diagnostics.min_eig_m = sym_eig(rom.Mr).values.minCoeff();
  rom.diagnostics.min_eig_d = sym_eig(rom.Dr).values.minCoeff();
  rom.diagnostics.min_eig_k = sym_eig(rom.Kr).values.minCoeff();
  return rom;
}

double dynamics_objective(const ReducedModel& rom, const CompressedData& data) {
  return (rom.Mr * data.Xddr + rom.Dr * data.Xdr + rom.Kr * data.Xr - rom.Br * data.U)
      .squaredNorm();
}

void save_rom(const std::filesystem::path& dir, const ReducedModel& rom) {
  std::filesystem::create_directories(dir);
  const SolveReport& d = rom.diagnostics;
  nlohmann::ordered_json meta;
  meta["r"] = rom.r();
  meta["provenance"] = provenance_name(rom.provenance);
  meta["iterations"] = d.iterations;
  meta["termination"] = d.termination;
  meta["final_objective"] = d.final_objective;
  meta["projected_gradient_norm"] = d.projected_gradient_norm;
  meta["gradient_scale"] = d.gradient_scale;
  meta["min_eig_m"] = d.min_eig_m;
  meta["min_eig_d"] = d.min_eig_d;
  meta["min_eig_k"] = d.min_eig_k;
  meta["rank_deficient_data"] = d.rank_deficient_data;
  meta["mass_floor_applied"] = d.mass_floor_applied;
  meta["column_scaling"] = d.column_scaling;
  meta["output_residual"] = d.output_residual;
  meta["output_rank_deficient"] = d.output_rank_deficient;
  write_file_atomic(dir / "rom.json", meta.dump(2) + "\n");

  std::string objective_csv = "iteration,objective\n";
  for (std::size_t i = 0; i < d.objective.size(); ++i) {
    objective_csv += std::to_string(i) + ',' + format_double(d.objective[i]) + '\n';
  }
  write_file_atomic(dir / "objective.csv", objective_csv);

  write_matrix_market(dir / "Mr.mtx", rom.Mr);
  write_matrix_market(dir / "Dr.mtx", rom.Dr);
  write_matrix_market(dir / "Kr.mtx", rom.Kr);
  write_matrix_market(dir / "Br.mtx", rom.Br);
  write_matrix_market(dir / "Cpr.mtx", rom.Cpr);
  write_matrix_market(dir / "Cvr.mtx", rom.Cvr);
}

ReducedModel load_rom(const std::filesystem::path& dir) {
  ReducedModel rom;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / "rom.json"));
    const std::string provenance = meta.at("provenance").get<std::string>();
    if (provenance == "inferred") {
      rom.provenance = Provenance::inferred;
    } else if (provenance == "intrusive") {
      rom.provenance = Provenance::intrusive;
    } else {
      throw ArtifactError("unknown provenance '" + provenance + "' in " + dir.string());
    }
    SolveReport& d = rom.diagnostics;
    d.iterations = meta.at("iterations").get<Index>();
    d.termination = meta.at("termination").get<std::string>();
    d.final_objective = meta.at("final_objective").get<double>();
    d.projected_gradient_norm = meta.at("projected_gradient_norm").get<double>();
    d.gradient_scale = meta.at("gradient_scale").get<double>();
    d.min_eig_m = meta.at("min_eig_m").get<double>();
    d.min_eig_d = meta.at("min_eig_d").get<double>();
    d.min_eig_k = meta.at("min_eig_k").get<double>();
    d.rank_deficient_data = meta.at("rank_deficient_data").get<bool>();
    d.mass_floor_applied = meta.at("mass_floor_applied").get<bool>();
    d.column_scaling = meta.at("column_scaling").get<bool>();
    d.output_residual = meta.at("output_residual").get<double>();
    d.output_rank_deficient = meta.at("output_rank_deficient").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("cannot parse " + (dir / "rom.json").string() + ": " + e.what());
  }

  const std::string objective_csv = read_file(dir / "objective.csv");
  std::size_t pos = objective_csv.find('\n');
  while (pos != std::string::npos && pos + 1 < objective_csv.size()) {
    const std::size_t next = objective_csv.find('\n', pos + 1);
    const std::string_view line(objective_csv.data() + pos + 1,
                                (next == std::string::npos ? objective_csv.size() : next) - pos - 1);
    const std::size_t comma = line.find(',');
    if (comma != std::string_view::npos) {
      double value = 0.0;
      const char* first = line.data() + comma + 1;
      const char* last = line.data() + line.size();
      if (std::from_chars(first, last, value).ec == std::errc()) {
        rom.diagnostics.objective.push_back(value);
      }
    }
    pos = next;
  }

  rom.Mr = read_matrix_market(dir / "Mr.mtx");
  rom.Dr = read_matrix_market(dir / "Dr.mtx");
  rom.Kr = read_matrix_market(dir / "Kr.mtx");
  rom.Br = read_matrix_market(dir / "Br.mtx");
  rom.Cpr = read_matrix_market(dir / "Cpr.mtx");
  rom.Cvr = read_matrix_market(dir / "Cvr.mtx");
  if (rom.Mr.rows() != rom.Mr.cols() || rom.Dr.rows() != rom.Mr.rows() ||
      rom.Kr.rows() != rom.Mr.rows() || rom.Br.rows() != rom.Mr.rows()) {
    throw ArtifactError("operator shapes disagree in " + dir.string());
  }
  return rom;
}

}  // namespace opinf
