#include "opinf/daesolve.hpp"

#include <json.hpp>

#include "opinf/errors.hpp"
#include "opinf/matrixmarket.hpp"

namespace opinf {

namespace {

Vector broadcast_input(const InputSignal& input, double t, Index m) {
  return input(t) * Vector::Ones(m);
}

}  // namespace

void validate_grid(const TimeGrid& grid) {
  if (!(grid.dt > 0.0)) throw Error("time grid needs dt > 0");
  if (grid.steps < 1) throw Error("time grid needs at least one step");
  if (!std::isfinite(grid.t0) || !std::isfinite(grid.dt)) throw Error("time grid not finite");
}

InitialState consistent_initialize(const SecondOrderDAE& sys, const Vector& x0, const Vector& v0,
                                   const Vector& u0) {
  const Index n = sys.n();
  if (x0.size() != n || v0.size() != n) throw Error("initial state dimension mismatch");
  if (u0.size() != sys.num_inputs()) throw Error("initial input dimension mismatch");

  InitialState init;
  init.x = x0;
  init.v = v0;
  if (sys.num_constraints() > 0) {
    const Matrix nbasis = kernel_basis(sys.G);
    if (sys.kind == ConstraintKind::position) {
      init.x = nbasis * (nbasis.transpose() * x0);
    }
    init.v = nbasis * (nbasis.transpose() * v0);
  }
  const Vector f = sys.B * u0 - sys.D * init.v - sys.K * init.x;
  auto [a, lambda] = solve_saddle(sys.M, sys.G, f, Vector::Zero(sys.num_constraints()));
  init.a = std::move(a);
  init.lambda = std::move(lambda);
  return init;
}

SnapshotSet newmark_dae(const SecondOrderDAE& sys, const TimeGrid& grid, const InputSignal& input,
                        const NewmarkOptions& options) {
  validate_grid(grid);
  const double beta = options.beta;
  const double gamma = options.gamma;
  if (!(beta > 0.0 && beta <= 0.5)) throw Error("beta must lie in (0, 1/2]");
  if (!(gamma >= 0.5 && gamma <= 1.0)) throw Error("gamma must lie in [1/2, 1]");

  const Index n = sys.n();
  const Index nc = sys.num_constraints();
  const Index m = sys.num_inputs();
  const Index k = grid.num_points();
  const double h = grid.dt;
  const bool position_kind = sys.kind == ConstraintKind::position;

  const Vector x0 = options.x0.size() == 0 ? Vector::Zero(n) : options.x0;
  const Vector v0 = options.v0.size() == 0 ? Vector::Zero(n) : options.v0;
  InitialState state = consistent_initialize(sys, x0, v0, broadcast_input(input, grid.time(0), m));

  const Matrix s_eff = sys.M + (gamma * h) * sys.D + (beta * h * h) * sys.K;
  SaddlePointSolver solver(s_eff, sys.G);

  Matrix projector;
  if (options.project_hidden_velocity && nc > 0) {
    const Matrix nbasis = kernel_basis(sys.G);
    projector = nbasis * nbasis.transpose();
  }

  SnapshotSet snaps;
  snaps.grid = grid;
  snaps.X.resize(n, k);
  snaps.Xd.resize(n, k);
  snaps.Xdd.resize(n, k);
  snaps.U.resize(m, k);
  snaps.Y.resize(sys.num_outputs(), k);
  snaps.Lambda.resize(nc, k);

  Vector x = state.x;
  Vector v = state.v;
  Vector a = state.a;
  Vector lambda = state.lambda;

  double state_scale = 0.0;
  auto record = [&](Index j) {
    snaps.X.col(j) = x;
    snaps.Xd.col(j) = v;
    snaps.Xdd.col(j) = a;
    snaps.U.col(j) = broadcast_input(input, grid.time(j), m);
    snaps.Y.col(j) = sys.Cp * x + sys.Cv * v;
    snaps.Lambda.col(j) = lambda;
    if (nc == 0) return;
    const Vector& constrained = position_kind ? x : v;
    state_scale = std::max(state_scale, constrained.cwiseAbs().maxCoeff());
    const double residual = (sys.G * constrained).cwiseAbs().maxCoeff();
    if (residual > 1e-9 * state_scale) {
      throw Error("constraint residual " + format_double(residual) + " exceeds tolerance at step " +
                  std::to_string(j));
    }
    if (state_scale > 0.0) {
      snaps.max_constraint_residual = std::max(snaps.max_constraint_residual, residual / state_scale);
    }
    if (position_kind) {
      snaps.max_hidden_drift = std::max(snaps.max_hidden_drift, (sys.G * v).cwiseAbs().maxCoeff());
    }
  };

  record(0);
  for (Index j = 1; j < k; ++j) {
    const double t = grid.time(j);
    const Vector x_star = x + h * v + (h * h * (0.5 - beta)) * a;
    const Vector v_star = v + (h * (1.0 - gamma)) * a;
    const Vector u = broadcast_input(input, t, m);
    const Vector f = sys.B * u - sys.D * v_star - sys.K * x_star;
    Vector g(nc);
    if (nc > 0) {
      if (position_kind) {
        g = -(sys.G * x_star) / (beta * h * h);
      } else {
        g = -(sys.G * v_star) / (gamma * h);
      }
    }
    auto [a_next, lambda_next] = solver.solve(f, g);
    x = x_star + (beta * h * h) * a_next;
    v = v_star + (gamma * h) * a_next;
    a = std::move(a_next);
    lambda = std::move(lambda_next);
    if (options.project_hidden_velocity && nc > 0 && position_kind) {
      v = projector * v;
    }
    record(j);
  }
  return snaps;
}

std::string trajectory_csv(const SnapshotSet& snaps) {
  std::string out = "t";
  for (Index i = 0; i < snaps.Y.rows(); ++i) out += ",y_" + std::to_string(i + 1);
  for (Index i = 0; i < snaps.U.rows(); ++i) out += ",u_" + std::to_string(i + 1);
  out += '\n';
  for (Index j = 0; j < snaps.grid.num_points(); ++j) {
    out += format_double(snaps.grid.time(j));
    for (Index i = 0; i < snaps.Y.rows(); ++i) out += ',' + format_double(snaps.Y(i, j));
    for (Index i = 0; i < snaps.U.rows(); ++i) out += ',' + format_double(snaps.U(i, j));
    out += '\n';
  }
  return out;
}

void save_snapshots(const std::filesystem::path& dir, const SnapshotSet& snaps) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json meta;
  meta["t0"] = snaps.grid.t0;
  meta["dt"] = snaps.grid.dt;
  meta["steps"] = snaps.grid.steps;
  meta["max_hidden_drift"] = snaps.max_hidden_drift;
  meta["max_constraint_residual"] = snaps.max_constraint_residual;
  write_file_atomic(dir / "grid.json", meta.dump(2) + "\n");
  write_matrix_market(dir / "X.mtx", snaps.X);
  write_matrix_market(dir / "Xd.mtx", snaps.Xd);
  write_matrix_market(dir / "Xdd.mtx", snaps.Xdd);
  write_matrix_market(dir / "U.mtx", snaps.U);
  write_matrix_market(dir / "Y.mtx", snaps.Y);
  write_matrix_market(dir / "Lambda.mtx", snaps.Lambda);
  write_file_atomic(dir / "trajectory.csv", trajectory_csv(snaps));
}

SnapshotSet load_snapshots(const std::filesystem::path& dir) {
  SnapshotSet snaps;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / "grid.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("cannot parse " + (dir / "grid.json").string() + ": " + e.what());
  }
  try {
    snaps.grid.t0 = meta.at("t0").get<double>();
    snaps.grid.dt = meta.at("dt").get<double>();
    snaps.grid.steps = meta.at("steps").get<Index>();
    snaps.max_hidden_drift = meta.value("max_hidden_drift", 0.0);
    snaps.max_constraint_residual = meta.value("max_constraint_residual", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("bad grid metadata in " + dir.string() + ": " + e.what());
  }
  snaps.X = read_matrix_market(dir / "X.mtx");
  snaps.Xd = read_matrix_market(dir / "Xd.mtx");
  snaps.Xdd = read_matrix_market(dir / "Xdd.mtx");
  snaps.U = read_matrix_market(dir / "U.mtx");
  snaps.Y = read_matrix_market(dir / "Y.mtx");
  snaps.Lambda = read_matrix_market(dir / "Lambda.mtx");
  const Index k = snaps.grid.num_points();
  if (snaps.X.cols() != k || snaps.Xd.cols() != k || snaps.Xdd.cols() != k ||
      snaps.U.cols() != k || snaps.Y.cols() != k) {
    throw ArtifactError("snapshot column count disagrees with grid in " + dir.string());
  }
  return snaps;
}

}  // namespace opinf
