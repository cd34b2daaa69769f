// Acceptance gate: runs both benchmark pipelines end to end, then checks every
// release criterion and prints one PASS/FAIL line per criterion. The exit code
// is the number of failed criteria, so `ctest` treats any regression as a
// test failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "opinf/daesolve.hpp"
#include "opinf/inference.hpp"
#include "opinf/matrixmarket.hpp"
#include "opinf/models.hpp"
#include "opinf/numkernel.hpp"
#include "opinf/pipeline.hpp"
#include "opinf/podspace.hpp"
#include "opinf/signals.hpp"

namespace fs = std::filesystem;
using opinf::Index;
using opinf::Matrix;
using opinf::Vector;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string num(double v) {
  std::ostringstream out;
  out.precision(3);
  out << v;
  return out.str();
}

struct BenchmarkRun {
  std::string label;
  fs::path config_path;
  opinf::PipelineConfig config;
  fs::path dir_a;
  fs::path dir_b;
  double seconds = 0.0;
  bool ran = false;
  std::string error;
};

nlohmann::json load_json(const fs::path& path) {
  return nlohmann::json::parse(opinf::read_file(path));
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<fs::path> regular_files(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) out.push_back(fs::relative(entry.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Matrix random_dense(Index rows, Index cols, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist;
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = dist(gen);
  return a;
}

Matrix random_spd(Index n, const std::vector<double>& eigenvalues, unsigned seed) {
  Eigen::HouseholderQR<Matrix> qr(random_dense(n, n, seed));
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  Vector lam(n);
  for (Index i = 0; i < n; ++i) lam[i] = eigenvalues[static_cast<std::size_t>(i)];
  Matrix out = q * lam.asDiagonal() * q.transpose();
  return 0.5 * (out + out.transpose());
}

struct TruthOps {
  Matrix M, D, K, B, Cp, Cv;
};

TruthOps make_truth() {
  TruthOps t;
  t.M = random_spd(4, {0.4, 0.8, 1.2, 1.6}, 11);
  t.D = random_spd(4, {0.3, 0.55, 0.9, 1.4}, 22);
  t.K = random_spd(4, {1.0, 2.2, 3.5, 5.1}, 33);
  t.B = random_dense(4, 1, 44);
  t.Cp = random_dense(2, 4, 55);
  t.Cv = random_dense(2, 4, 66);
  return t;
}

// Steady harmonic response of the truth system: u(t) = sum_l g_l sin(w_l t)
// drives x(t) = sum_l Im[a_l e^{i w_l t}] with (-w^2 M + i w D + K) a_l = B g_l,
// so the trajectory satisfies the equations of motion exactly and all
// derivatives are available in closed form.
opinf::CompressedData harmonic_response_data(const TruthOps& t, Index k, double dt) {
  using Cplx = std::complex<double>;
  const Index r = t.M.rows();
  const std::vector<double> omegas = {0.5, 0.9, 1.4, 2.2, 3.0, 4.1, 5.2, 6.6};
  const std::vector<double> gains = {1.0, 0.9, 1.1, 0.8, 1.2, 0.7, 1.0, 0.85};

  Eigen::MatrixXcd amps(r, static_cast<Index>(omegas.size()));
  for (std::size_t l = 0; l < omegas.size(); ++l) {
    const double w = omegas[l];
    Eigen::MatrixXcd h =
        (-w * w) * t.M.cast<Cplx>() + Cplx(0.0, w) * t.D.cast<Cplx>() + t.K.cast<Cplx>();
    amps.col(static_cast<Index>(l)) = h.lu().solve(t.B.cast<Cplx>() * gains[l]);
  }

  opinf::CompressedData data;
  data.Xr = Matrix::Zero(r, k);
  data.Xdr = Matrix::Zero(r, k);
  data.Xddr = Matrix::Zero(r, k);
  data.U = Matrix::Zero(1, k);
  for (Index j = 0; j < k; ++j) {
    const double time = dt * static_cast<double>(j);
    for (std::size_t l = 0; l < omegas.size(); ++l) {
      const double w = omegas[l];
      const Cplx phase = std::exp(Cplx(0.0, w * time));
      const Eigen::VectorXcd a = amps.col(static_cast<Index>(l));
      data.Xr.col(j) += (a * phase).imag();
      data.Xdr.col(j) += (Cplx(0.0, w) * a * phase).imag();
      data.Xddr.col(j) += (Cplx(-w * w, 0.0) * a * phase).imag();
      data.U(0, j) += gains[l] * std::sin(w * time);
    }
  }
  data.Y = t.Cp * data.Xr + t.Cv * data.Xdr;
  return data;
}

double relative_gap(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

opinf::SecondOrderDAE unconstrained_chain(Index n) {
  opinf::SecondOrderDAE sys;
  sys.M = Matrix::Identity(n, n);
  Matrix pattern = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    pattern(i, i) = 3.0;
    if (i + 1 < n) {
      pattern(i, i + 1) = -1.0;
      pattern(i + 1, i) = -1.0;
    }
  }
  sys.K = 4.0 * pattern;
  sys.D = 0.4 * pattern;
  sys.G = Matrix(0, n);
  sys.B = Matrix::Zero(n, 1);
  sys.B(n - 1, 0) = 1.0;
  sys.Cp = Matrix::Zero(1, n);
  sys.Cp(0, 0) = 1.0;
  sys.Cv = Matrix::Zero(1, n);
  return sys;
}

void criterion_1_dimensions(const BenchmarkRun& anchored, const BenchmarkRun& triple) {
  const opinf::SecondOrderDAE a = opinf::build_model(anchored.config.model);
  const opinf::SecondOrderDAE t = opinf::build_model(triple.config.model);
  bool ok = a.n() == 600 && a.kind == opinf::ConstraintKind::position && a.G.rows() == 1;
  ok = ok && t.n() == 301 && t.kind == opinf::ConstraintKind::velocity && t.G.rows() == 2;
  const Index ra = load_json(anchored.dir_a / "pod.json").at("r").get<Index>();
  const Index rt = load_json(triple.dir_a / "pod.json").at("r").get<Index>();
  ok = ok && ra == 5 && rt == 35;
  ok = ok && anchored.seconds <= 180.0 && triple.seconds <= 180.0;
  report(1, ok,
         "benchmark dimensions and runtime: anchored n=" + std::to_string(a.n()) + ", " +
             std::to_string(a.G.rows()) + " position constraint, r=" + std::to_string(ra) +
             ", " + num(anchored.seconds) + "s; triple n=" + std::to_string(t.n()) + ", " +
             std::to_string(t.G.rows()) + " velocity constraints, r=" + std::to_string(rt) +
             ", " + num(triple.seconds) + "s (limit 180s each)");
}

void criterion_2_constraints(const BenchmarkRun& anchored, const BenchmarkRun& triple) {
  double worst_residual = 0.0;
  double worst_compat = 0.0;
  for (const BenchmarkRun* bench : {&anchored, &triple}) {
    const nlohmann::json oracle = load_json(bench->dir_a / "oracle.json");
    worst_residual = std::max(worst_residual, oracle.at("max_constraint_residual").get<double>());
    worst_compat = std::max(worst_compat, oracle.at("constraint_compatibility").get<double>());
  }
  const bool ok = worst_residual <= 1e-9 && worst_compat <= 1e-8;
  report(2, ok,
         "constraint exactness: max enforced residual " + num(worst_residual) +
             " (tol 1e-9), max basis compatibility defect " + num(worst_compat) + " (tol 1e-8)");
}

void criterion_3_exact_recovery() {
  const TruthOps t = make_truth();
  const opinf::CompressedData dyn_data = harmonic_response_data(t, 500, 0.05);
  opinf::InferOptions options;
  options.kkt_tol = 1e-11;
  const opinf::ReducedModel rom = opinf::infer_dynamics(dyn_data, options);
  const double op_gap = std::max({relative_gap(rom.Mr, t.M), relative_gap(rom.Dr, t.D),
                                  relative_gap(rom.Kr, t.K), relative_gap(rom.Br, t.B)});

  const opinf::CompressedData out_data = harmonic_response_data(t, 400, 0.05);
  const opinf::OutputFit fit = opinf::infer_output(out_data);
  const double out_gap = std::max(relative_gap(fit.Cpr, t.Cp), relative_gap(fit.Cvr, t.Cv));

  const bool ok = op_gap <= 1e-6 && out_gap <= 1e-8;
  report(3, ok,
         "exact recovery from synthetic r=4 data: operator gap " + num(op_gap) +
             " (tol 1e-6), output map gap " + num(out_gap) + " (tol 1e-8)");
}

void criterion_4_optimality(const BenchmarkRun& anchored, const BenchmarkRun& triple) {
  bool ok = true;
  std::string detail = "fit objective at inferred vs intrusive operators:";
  for (const BenchmarkRun* bench : {&anchored, &triple}) {
    const nlohmann::json oracle = load_json(bench->dir_a / "oracle.json");
    const double inferred = oracle.at("inferred").at("objective").get<double>();
    const double intrusive = oracle.at("intrusive").at("objective").get<double>();
    ok = ok && inferred <= intrusive + 1e-8;
    detail += " " + bench->label + " " + num(inferred) + " <= " + num(intrusive) + " + 1e-8;";
  }
  report(4, ok, detail);
}

void criterion_5_closeness(const BenchmarkRun& anchored, const BenchmarkRun& triple) {
  bool ok = true;
  std::string detail = "training-horizon error vs intrusive reduction:";
  for (const BenchmarkRun* bench : {&anchored, &triple}) {
    const nlohmann::json oracle = load_json(bench->dir_a / "oracle.json");
    const double inferred = oracle.at("inferred").at("max_training_error").get<double>();
    const double intrusive = oracle.at("intrusive").at("max_training_error").get<double>();
    ok = ok && inferred <= 10.0 * intrusive;
    detail += " " + bench->label + " " + num(inferred) + " vs " + num(intrusive) + " (10x cap);";
  }
  report(5, ok, detail);
}

void criterion_6_stability(const BenchmarkRun& anchored, const BenchmarkRun& triple) {
  bool ok = true;
  std::string detail = "inferred operator spectra and bounded test response:";
  for (const BenchmarkRun* bench : {&anchored, &triple}) {
    const nlohmann::json rom = load_json(bench->dir_a / "rom_inferred" / "rom.json");
    const double min_eig = std::min({rom.at("min_eig_m").get<double>(),
                                     rom.at("min_eig_d").get<double>(),
                                     rom.at("min_eig_k").get<double>()});
    const Matrix y_rom =
        opinf::read_matrix_market(bench->dir_a / "rom_traj" / "test" / "Y.mtx");
    const Matrix y_fom = opinf::read_matrix_market(bench->dir_a / "snapshots" / "test" / "Y.mtx");
    const double peak_rom = y_rom.cwiseAbs().maxCoeff();
    const double peak_fom = y_fom.cwiseAbs().maxCoeff();
    ok = ok && min_eig >= -1e-8 && peak_rom <= 1e3 * peak_fom;
    detail += " " + bench->label + " min eig " + num(min_eig) + ", |y| ratio " +
              num(peak_rom / peak_fom) + " (cap 1e3);";
  }
  report(6, ok, detail);
}

void criterion_7_integrator_order() {
  const opinf::SecondOrderDAE sys = unconstrained_chain(4);
  const opinf::InputSignal input = opinf::harmonic_signal(1.0, 2.0);
  const double t_end = 2.0;
  const double dt = 0.02;
  auto run = [&](double step) {
    opinf::TimeGrid grid{0.0, step, static_cast<Index>(std::llround(t_end / step))};
    return opinf::newmark_dae(sys, grid, input);
  };
  const opinf::SnapshotSet coarse = run(dt);
  const opinf::SnapshotSet mid = run(dt / 2.0);
  const opinf::SnapshotSet ref = run(dt / 64.0);
  auto error_against_ref = [&](const opinf::SnapshotSet& snaps, Index stride) {
    double err = 0.0;
    for (Index j = 0; j < snaps.X.cols(); ++j)
      err = std::max(err, (snaps.X.col(j) - ref.X.col(j * stride)).cwiseAbs().maxCoeff());
    return err;
  };
  const double ratio = error_against_ref(coarse, 64) / error_against_ref(mid, 32);
  const bool ok = ratio >= 3.4 && ratio <= 4.6;
  report(7, ok,
         "time integrator order: error ratio under dt halving " + num(ratio) +
             " (expected in [3.4, 4.6])");
}

void criterion_8_numerics_batteries() {
  std::mt19937 gen(2026);
  std::normal_distribution<double> dist;
  std::uniform_int_distribution<Index> size(1, 40);
  auto random_matrix = [&](Index rows, Index cols) {
    Matrix a(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) a(i, j) = dist(gen);
    return a;
  };

  double worst_svd = 0.0;
  for (int c = 0; c < 50; ++c) {
    const Matrix a = random_matrix(size(gen), size(gen));
    const opinf::SvdResult svd = opinf::thin_svd(a);
    const Matrix recon = svd.u * svd.singular_values.asDiagonal() * svd.w.transpose();
    const double scale = std::max(a.norm(), 1e-300);
    worst_svd = std::max(worst_svd, (a - recon).norm() / scale);
    const Index q = svd.singular_values.size();
    worst_svd = std::max(worst_svd, (svd.u.transpose() * svd.u - Matrix::Identity(q, q)).norm());
    worst_svd = std::max(worst_svd, (svd.w.transpose() * svd.w - Matrix::Identity(q, q)).norm());
  }

  double worst_eig = 0.0;
  for (int c = 0; c < 50; ++c) {
    const Index n = 1 + size(gen) % 30;
    Matrix s = random_matrix(n, n);
    s = 0.5 * (s + s.transpose()).eval();
    const opinf::EigResult eig = opinf::sym_eig(s);
    const Matrix recon = eig.q * eig.values.asDiagonal() * eig.q.transpose();
    worst_eig = std::max(worst_eig, (s - recon).norm() / std::max(s.norm(), 1e-300));
    worst_eig =
        std::max(worst_eig, (eig.q.transpose() * eig.q - Matrix::Identity(n, n)).norm());
  }

  double worst_psd = 0.0;
  for (int c = 0; c < 50; ++c) {
    Matrix s = random_matrix(4, 4);
    s = 0.5 * (s + s.transpose()).eval();
    const Matrix p = opinf::psd_project(s);
    const double scale = std::max(1.0, s.norm());
    worst_psd = std::max(worst_psd, (opinf::psd_project(p) - p).norm() / scale);
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    const Matrix clipped = es.eigenvectors() *
                           es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                           es.eigenvectors().transpose();
    worst_psd = std::max(worst_psd, (p - clipped).norm() / scale);
    for (int probe = 0; probe < 3; ++probe) {
      const Matrix root = random_matrix(4, 4);
      const Matrix z = root * root.transpose();
      if ((s - p).norm() > (s - z).norm() + 1e-12) worst_psd = 1.0;
    }
  }

  const bool ok = worst_svd <= 1e-9 && worst_eig <= 1e-9 && worst_psd <= 1e-9;
  report(8, ok,
         "randomized numerics batteries (50 cases each): svd defect " + num(worst_svd) +
             ", eig defect " + num(worst_eig) + ", psd projection defect " + num(worst_psd) +
             " (tol 1e-9)");
}

void criterion_9_determinism(const BenchmarkRun& anchored, const BenchmarkRun& triple) {
  bool ok = true;
  int files = 0;
  std::string first_diff;
  for (const BenchmarkRun* bench : {&anchored, &triple}) {
    const std::vector<fs::path> left = regular_files(bench->dir_a);
    const std::vector<fs::path> right = regular_files(bench->dir_b);
    if (left != right) {
      ok = false;
      first_diff = bench->label + " file lists differ";
      continue;
    }
    for (const fs::path& rel : left) {
      ++files;
      if (read_bytes(bench->dir_a / rel) != read_bytes(bench->dir_b / rel)) {
        ok = false;
        if (first_diff.empty()) first_diff = bench->label + "/" + rel.string();
      }
    }
  }
  std::string detail = "repeated runs byte-identical across " + std::to_string(files) + " files";
  if (!ok) detail += "; first difference: " + first_diff;
  report(9, ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <configs-dir>\n", argv[0]);
    return 2;
  }
  const fs::path configs(argv[1]);
  const fs::path scratch = fs::temp_directory_path() / "opinf_acceptance";
  std::error_code ec;
  fs::remove_all(scratch, ec);

  BenchmarkRun anchored{"anchored", configs / "anchored_chain.json", {}, {}, {}, 0.0, false, ""};
  BenchmarkRun triple{"triple", configs / "triple_chain.json", {}, {}, {}, 0.0, false, ""};
  for (BenchmarkRun* bench : {&anchored, &triple}) {
    try {
      bench->config = opinf::load_config(bench->config_path);
      bench->dir_a = scratch / bench->label / "a";
      bench->dir_b = scratch / bench->label / "b";
      opinf::PipelineConfig config = bench->config;
      config.output_dir = bench->dir_a;
      const auto start = std::chrono::steady_clock::now();
      opinf::cmd_pipeline(config);
      bench->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      config.output_dir = bench->dir_b;
      opinf::cmd_pipeline(config);
      bench->ran = true;
    } catch (const std::exception& e) {
      bench->error = e.what();
    }
  }

  const bool pipelines_ok = anchored.ran && triple.ran;
  auto guarded = [&](int id, bool needs_runs, auto&& body) {
    if (needs_runs && !pipelines_ok) {
      report(id, false,
             "skipped: pipeline run failed (" + (anchored.ran ? triple.error : anchored.error) + ")");
      return;
    }
    try {
      body();
    } catch (const std::exception& e) {
      report(id, false, std::string("unexpected error: ") + e.what());
    }
  };

  guarded(1, true, [&] { criterion_1_dimensions(anchored, triple); });
  guarded(2, true, [&] { criterion_2_constraints(anchored, triple); });
  guarded(3, false, [&] { criterion_3_exact_recovery(); });
  guarded(4, true, [&] { criterion_4_optimality(anchored, triple); });
  guarded(5, true, [&] { criterion_5_closeness(anchored, triple); });
  guarded(6, true, [&] { criterion_6_stability(anchored, triple); });
  guarded(7, false, [&] { criterion_7_integrator_order(); });
  guarded(8, false, [&] { criterion_8_numerics_batteries(); });
  guarded(9, true, [&] { criterion_9_determinism(anchored, triple); });

  std::printf("%d/9 criteria passed\n", 9 - failures);
  return failures;
}
