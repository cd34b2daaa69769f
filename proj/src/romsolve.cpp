#include "opinf/romsolve.hpp"

#include <json.hpp>

#include "opinf/matrixmarket.hpp"

namespace opinf {

namespace {

SpdSolver factor_or_describe(const Matrix& s, const std::string& label) {
  try {
    return SpdSolver(s);
  } catch (const NotPositiveDefiniteError& e) {
    const double min_eig = sym_eig(s).values.minCoeff();
    throw NotPositiveDefiniteError(
        label + " not positive definite (min eigenvalue " + format_double(min_eig) + ")",
        e.pivot_index());
  }
}

}  // namespace

RomTrajectory newmark_ode(const ReducedModel& rom, const TimeGrid& grid, const InputSignal& input,
                          const OdeOptions& options) {
  validate_grid(grid);
  const Index r = rom.r();
  const Index m = rom.num_inputs();
  const Index p = rom.num_outputs();
  if (r < 1) throw Error("reduced model is empty");
  if (rom.Mr.cols() != r || rom.Dr.rows() != r || rom.Dr.cols() != r || rom.Kr.rows() != r ||
      rom.Kr.cols() != r || rom.Br.rows() != r) {
    throw Error("reduced operator shapes disagree");
  }
  const double beta = options.beta;
  const double gamma = options.gamma;
  if (!(beta > 0.0 && beta <= 0.5)) throw Error("beta must lie in (0, 1/2]");
  if (!(gamma >= 0.5 && gamma <= 1.0)) throw Error("gamma must lie in [1/2, 1]");

  Vector x = options.x0.size() > 0 ? options.x0 : Vector(Vector::Zero(r));
  Vector v = options.v0.size() > 0 ? options.v0 : Vector(Vector::Zero(r));
  if (x.size() != r || v.size() != r) throw Error("initial state dimension disagrees");
  require_finite(x, "reduced initial displacement");
  require_finite(v, "reduced initial velocity");

  const double h = grid.dt;
  Matrix s_eff = rom.Mr + (gamma * h) * rom.Dr + (beta * h * h) * rom.Kr;
  s_eff = 0.5 * (s_eff + s_eff.transpose()).eval();
  const SpdSolver effective = factor_or_describe(s_eff, "reduced effective matrix");
  const SpdSolver mass = factor_or_describe(rom.Mr, "reduced mass matrix");

  const Index count = grid.num_points();
  RomTrajectory traj;
  traj.grid = grid;
  traj.Xr = Matrix::Zero(r, count);
  traj.Xdr = Matrix::Zero(r, count);
  traj.U = Matrix::Zero(m, count);

  Vector u = input(grid.t0) * Vector::Ones(m);
  Vector a = mass.solve(Vector(rom.Br * u - rom.Dr * v - rom.Kr * x));
  traj.Xr.col(0) = x;
  traj.Xdr.col(0) = v;
  traj.U.col(0) = u;

  for (Index j = 1; j < count; ++j) {
    const Vector x_star = x + h * v + (h * h * (0.5 - beta)) * a;
    const Vector v_star = v + (h * (1.0 - gamma)) * a;
    u = input(grid.time(j)) * Vector::Ones(m);
    a = effective.solve(Vector(rom.Br * u - rom.Dr * v_star - rom.Kr * x_star));
    x = x_star + (beta * h * h) * a;
    v = v_star + (gamma * h) * a;
    if (!x.allFinite() || !v.allFinite()) {
      throw Error("reduced trajectory diverged at step " + std::to_string(j));
    }
    traj.Xr.col(j) = x;
    traj.Xdr.col(j) = v;
    traj.U.col(j) = u;
  }

  traj.Y = Matrix::Zero(p, count);
  if (p > 0) traj.Y = rom.Cpr * traj.Xr + rom.Cvr * traj.Xdr;
  return traj;
}

std::pair<Vector, Vector> initial_reduced_state(const PodBasis& basis, const Vector& x0_full,
                                                const Vector& v0_full) {
  if (x0_full.size() != basis.n() || v0_full.size() != basis.n()) {
    throw Error("initial state dimension disagrees with the basis");
  }
  return {basis.Vr.transpose() * x0_full, basis.Vr.transpose() * v0_full};
}

std::string rom_trajectory_csv(const RomTrajectory& traj) {
  std::string out = "t";
  for (Index i = 0; i < traj.Y.rows(); ++i) out += ",y_" + std::to_string(i + 1);
  for (Index i = 0; i < traj.U.rows(); ++i) out += ",u_" + std::to_string(i + 1);
  out += '\n';
  for (Index j = 0; j < traj.grid.num_points(); ++j) {
    out += format_double(traj.grid.time(j));
    for (Index i = 0; i < traj.Y.rows(); ++i) out += ',' + format_double(traj.Y(i, j));
    for (Index i = 0; i < traj.U.rows(); ++i) out += ',' + format_double(traj.U(i, j));
    out += '\n';
  }
  return out;
}

void save_rom_trajectory(const std::filesystem::path& dir, const RomTrajectory& traj) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json meta;
  meta["t0"] = traj.grid.t0;
  meta["dt"] = traj.grid.dt;
  meta["steps"] = traj.grid.steps;
  write_file_atomic(dir / "grid.json", meta.dump(2) + "\n");
  write_matrix_market(dir / "Xr.mtx", traj.Xr);
  write_matrix_market(dir / "Xdr.mtx", traj.Xdr);
  write_matrix_market(dir / "U.mtx", traj.U);
  write_matrix_market(dir / "Y.mtx", traj.Y);
  write_file_atomic(dir / "trajectory.csv", rom_trajectory_csv(traj));
}

RomTrajectory load_rom_trajectory(const std::filesystem::path& dir) {
  RomTrajectory traj;
  try {
    const nlohmann::json meta = nlohmann::json::parse(read_file(dir / "grid.json"));
    traj.grid.t0 = meta.at("t0").get<double>();
    traj.grid.dt = meta.at("dt").get<double>();
    traj.grid.steps = meta.at("steps").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("cannot parse " + (dir / "grid.json").string() + ": " + e.what());
  }
  validate_grid(traj.grid);
  traj.Xr = read_matrix_market(dir / "Xr.mtx");
  traj.Xdr = read_matrix_market(dir / "Xdr.mtx");
  traj.U = read_matrix_market(dir / "U.mtx");
  traj.Y = read_matrix_market(dir / "Y.mtx");
  const Index count = traj.grid.num_points();
  if (traj.Xr.cols() != count || traj.Xdr.cols() != count || traj.U.cols() != count ||
      traj.Y.cols() != count) {
    throw ArtifactError("trajectory column counts disagree with the grid in " + dir.string());
  }
  return traj;
}

}  // namespace opinf
