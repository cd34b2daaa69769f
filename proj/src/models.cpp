#include "opinf/models.hpp"

#include <string>

#include "opinf/errors.hpp"
#include "opinf/matrixmarket.hpp"

namespace opinf {

namespace {

void check_symmetric(const Matrix& a, const char* label) {
  const double defect = (a - a.transpose()).norm();
  if (defect > 1e-8 * std::max(1.0, a.norm())) {
    throw Error(std::string(label) + " matrix not symmetric (defect " +
                std::to_string(defect) + ")");
  }
}

void check_spd(const Matrix& a, const char* label) {
  const double min_eig = sym_eig(a).values.minCoeff();
  if (min_eig <= 0.0) {
    throw Error(std::string(label) + " matrix not positive definite (min eigenvalue " +
                format_double(min_eig) + ")");
  }
}

void check_psd(const Matrix& a, const char* label) {
  const double min_eig = sym_eig(a).values.minCoeff();
  if (min_eig < -1e-12 * std::max(1.0, a.norm())) {
    throw Error(std::string(label) + " matrix not positive semidefinite (min eigenvalue " +
                format_double(min_eig) + ")");
  }
}

void check_nodes(const std::vector<Index>& nodes, Index n, const char* label) {
  if (nodes.empty()) throw Error(std::string(label) + " node list is empty");
  for (Index node : nodes) {
    if (node < 0 || node >= n) {
      throw Error(std::string(label) + " node " + std::to_string(node) +
                  " outside [0, " + std::to_string(n) + ")");
    }
  }
}

Matrix selection_rows(const std::vector<Index>& nodes, Index n) {
  Matrix s = Matrix::Zero(static_cast<Index>(nodes.size()), n);
  for (std::size_t i = 0; i < nodes.size(); ++i) s(static_cast<Index>(i), nodes[i]) = 1.0;
  return s;
}

Matrix load_columns(const std::vector<Index>& nodes, Index n) {
  Matrix b = Matrix::Zero(n, static_cast<Index>(nodes.size()));
  for (std::size_t j = 0; j < nodes.size(); ++j) b(nodes[j], static_cast<Index>(j)) = 1.0;
  return b;
}

void add_spring(Matrix& k, Index i, Index j, double c) {
  k(i, i) += c;
  k(j, j) += c;
  k(i, j) -= c;
  k(j, i) -= c;
}

}  // namespace

void validate_system(const SecondOrderDAE& sys) {
  const Index n = sys.M.rows();
  if (n == 0) throw Error("system has no degrees of freedom");
  auto check_shape = [&](const Matrix& a, Index rows, Index cols, const char* label) {
    if (a.rows() != rows || a.cols() != cols) {
      throw Error(std::string(label) + " has shape " + std::to_string(a.rows()) + "x" +
                  std::to_string(a.cols()) + ", expected " + std::to_string(rows) + "x" +
                  std::to_string(cols));
    }
  };
  check_shape(sys.M, n, n, "mass matrix");
  check_shape(sys.D, n, n, "damping matrix");
  check_shape(sys.K, n, n, "stiffness matrix");
  if (sys.G.rows() > 0 && sys.G.cols() != n) {
    throw Error("constraint Jacobian has " + std::to_string(sys.G.cols()) +
                " columns, expected " + std::to_string(n));
  }
  if (sys.B.rows() != n) throw Error("input matrix row count mismatch");
  check_shape(sys.Cp, sys.Cp.rows(), n, "position output matrix");
  check_shape(sys.Cv, sys.Cp.rows(), n, "velocity output matrix");

  require_finite(sys.M, "mass matrix");
  require_finite(sys.D, "damping matrix");
  require_finite(sys.K, "stiffness matrix");
  require_finite(sys.G, "constraint Jacobian");
  require_finite(sys.B, "input matrix");
  require_finite(sys.Cp, "position output matrix");
  require_finite(sys.Cv, "velocity output matrix");

  check_symmetric(sys.M, "mass");
  check_symmetric(sys.D, "damping");
  check_symmetric(sys.K, "stiffness");
  check_spd(sys.M, "mass");
  check_spd(sys.K, "stiffness");
  check_psd(sys.D, "damping");

  if (sys.G.rows() > 0) {
    if (sys.G.rows() >= n) throw Error("constraint count must be below the state dimension");
    auto svd = thin_svd(sys.G);
    const Index rank = numerical_rank(svd.singular_values, 1e-10);
    if (rank < sys.G.rows()) {
      throw RankDeficiencyError("constraint Jacobian rank-deficient", rank);
    }
  }
}

SecondOrderDAE build_anchored_chain(Index n_masses, double mass, double stiffness,
                                    double damping, std::vector<Index> load_nodes,
                                    std::vector<Index> output_nodes) {
  if (n_masses < 3) throw Error("anchored chain needs at least 3 masses");
  if (mass <= 0.0 || stiffness <= 0.0 || damping <= 0.0) {
    throw Error("anchored chain parameters must be positive");
  }
  const Index n = n_masses;
  if (load_nodes.empty()) load_nodes = {n / 3};
  if (output_nodes.empty()) output_nodes = {n / 6, n / 2, (5 * n) / 6};
  check_nodes(load_nodes, n, "load");
  check_nodes(output_nodes, n, "output");

  SecondOrderDAE sys;
  sys.M = mass * Matrix::Identity(n, n);
  Matrix pattern = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    pattern(i, i) = 3.0;
    if (i + 1 < n) {
      pattern(i, i + 1) = -1.0;
      pattern(i + 1, i) = -1.0;
    }
  }
  sys.K = stiffness * pattern;
  sys.D = damping * pattern;
  sys.kind = ConstraintKind::position;
  sys.G = Matrix::Zero(1, n);
  sys.G(0, 0) = 1.0;
  sys.G(0, n - 1) = -1.0;
  sys.B = load_columns(load_nodes, n);
  sys.Cp = selection_rows(output_nodes, n);
  sys.Cv = Matrix::Zero(sys.Cp.rows(), n);
  validate_system(sys);
  return sys;
}

SecondOrderDAE build_triple_chain(Index chain_length, double mass, double stiffness,
                                  double damping_alpha, double damping_beta,
                                  std::vector<Index> load_nodes,
                                  std::vector<Index> output_nodes) {
  if (chain_length < 2) throw Error("triple chain needs chain_length >= 2");
  if (mass <= 0.0 || stiffness <= 0.0) throw Error("mass and stiffness must be positive");
  if (damping_alpha < 0.0 || damping_beta < 0.0) {
    throw Error("Rayleigh coefficients must be nonnegative");
  }
  const Index len = chain_length;
  const Index n = 3 * len + 1;
  const Index hub = 3 * len;
  if (load_nodes.empty()) load_nodes = {len / 2};
  if (output_nodes.empty()) output_nodes = {len / 2, hub};
  check_nodes(load_nodes, n, "load");
  check_nodes(output_nodes, n, "output");

  SecondOrderDAE sys;
  sys.M = mass * Matrix::Identity(n, n);
  sys.K = Matrix::Zero(n, n);
  for (Index c = 0; c < 3; ++c) {
    const Index base = c * len;
    sys.K(base, base) += stiffness;
    for (Index i = 0; i + 1 < len; ++i) add_spring(sys.K, base + i, base + i + 1, stiffness);
    add_spring(sys.K, base + len - 1, hub, stiffness);
  }
  sys.D = damping_alpha * sys.M + damping_beta * sys.K;
  sys.kind = ConstraintKind::velocity;
  sys.G = Matrix::Zero(2, n);
  sys.G(0, len - 1) = 1.0;
  sys.G(0, 2 * len - 1) = -1.0;
  sys.G(1, 2 * len - 1) = 1.0;
  sys.G(1, 3 * len - 1) = -1.0;
  sys.B = load_columns(load_nodes, n);
  sys.Cv = selection_rows(output_nodes, n);
  sys.Cp = Matrix::Zero(sys.Cv.rows(), n);
  validate_system(sys);
  return sys;
}

SecondOrderDAE load_system(const std::filesystem::path& dir) {
  auto read_required = [&](const char* name) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) {
      throw IoError("missing " + std::string(name) + " in " + dir.string());
    }
    return read_matrix_market(path);
  };

  SecondOrderDAE sys;
  sys.M = read_required("M.mtx");
  sys.D = read_required("D.mtx");
  sys.K = read_required("K.mtx");
  sys.B = read_required("B.mtx");
  sys.Cp = read_required("Cp.mtx");
  sys.Cv = read_required("Cv.mtx");

  const bool has_gp = std::filesystem::exists(dir / "Gp.mtx");
  const bool has_gv = std::filesystem::exists(dir / "Gv.mtx");
  if (has_gp == has_gv) {
    throw Error("expected exactly one of Gp.mtx / Gv.mtx in " + dir.string());
  }
  if (has_gp) {
    sys.kind = ConstraintKind::position;
    sys.G = read_matrix_market(dir / "Gp.mtx");
  } else {
    sys.kind = ConstraintKind::velocity;
    sys.G = read_matrix_market(dir / "Gv.mtx");
  }

  check_symmetric(sys.M, "mass");
  check_symmetric(sys.D, "damping");
  check_symmetric(sys.K, "stiffness");
  sys.M = 0.5 * (sys.M + sys.M.transpose()).eval();
  sys.D = 0.5 * (sys.D + sys.D.transpose()).eval();
  sys.K = 0.5 * (sys.K + sys.K.transpose()).eval();
  validate_system(sys);
  return sys;
}

void save_system(const std::filesystem::path& dir, const SecondOrderDAE& sys) {
  std::filesystem::create_directories(dir);
  write_matrix_market(dir / "M.mtx", sys.M);
  write_matrix_market(dir / "D.mtx", sys.D);
  write_matrix_market(dir / "K.mtx", sys.K);
  write_matrix_market(dir / "B.mtx", sys.B);
  write_matrix_market(dir / "Cp.mtx", sys.Cp);
  write_matrix_market(dir / "Cv.mtx", sys.Cv);
  write_matrix_market(dir / (sys.kind == ConstraintKind::position ? "Gp.mtx" : "Gv.mtx"), sys.G);
}

}  // namespace opinf
