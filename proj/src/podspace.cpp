#include "opinf/podspace.hpp"

#include <json.hpp>

#include "opinf/errors.hpp"
#include "opinf/matrixmarket.hpp"

namespace opinf {

TruncationRule TruncationRule::fixed(Index r) {
  if (r < 1) throw Error("fixed truncation needs r >= 1");
  TruncationRule rule;
  rule.kind = Kind::fixed_r;
  rule.r = r;
  return rule;
}

TruncationRule TruncationRule::threshold(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error("energy threshold must lie in (0, 1]");
  TruncationRule rule;
  rule.kind = Kind::energy_threshold;
  rule.tau = tau;
  return rule;
}

TruncationRule TruncationRule::saturation(Index window, double eps) {
  if (window < 1 || !(eps > 0.0)) throw Error("saturation rule needs window >= 1 and eps > 0");
  TruncationRule rule;
  rule.kind = Kind::energy_saturation;
  rule.window = window;
  rule.eps = eps;
  return rule;
}

namespace {

Index pick_order(const Vector& sigma, const Vector& energy, const TruncationRule& rule) {
  const Index count = sigma.size();
  const Index rank = numerical_rank(sigma, 1e-12);
  switch (rule.kind) {
    case TruncationRule::Kind::fixed_r:
      if (rule.r > rank) {
        throw RankDeficiencyError("requested order " + std::to_string(rule.r) +
                                      " exceeds the snapshot rank",
                                  rank);
      }
      return rule.r;
    case TruncationRule::Kind::energy_threshold:
      for (Index i = 0; i < count; ++i) {
        if (energy(i) >= rule.tau) return std::min(i + 1, rank);
      }
      return rank;
    case TruncationRule::Kind::energy_saturation:
      for (Index i = 0; i + rule.window < count; ++i) {
        if (energy(i + rule.window) - energy(i) < rule.eps) return std::min(i + 1, rank);
      }
      return rank;
  }
  return rank;
}

}  // namespace

PodBasis build_basis(const SnapshotSet& snaps, ConstraintKind kind, const TruncationRule& rule,
                     bool center) {
  const Matrix& source = kind == ConstraintKind::position ? snaps.X : snaps.Xd;
  if (source.cols() < 2) throw Error("need at least two snapshot columns");
  require_finite(source, "snapshot matrix");

  Matrix work = source;
  if (center) {
    const Vector mean = work.rowwise().mean();
    work.colwise() -= mean;
  }
  auto svd = thin_svd(work);
  const double total = svd.singular_values.sum();
  if (!(total > 0.0)) throw Error("snapshot matrix is identically zero");

  PodBasis basis;
  basis.source =
      kind == ConstraintKind::position ? PodSource::displacement : PodSource::velocity;
  basis.singular_values = svd.singular_values;
  basis.cum_energy.resize(svd.singular_values.size());
  double running = 0.0;
  for (Index i = 0; i < svd.singular_values.size(); ++i) {
    running += svd.singular_values(i);
    basis.cum_energy(i) = running / total;
  }
  basis.cum_energy(basis.cum_energy.size() - 1) = 1.0;

  const Index r = pick_order(basis.singular_values, basis.cum_energy, rule);
  basis.Vr = svd.u.leftCols(r);
  return basis;
}

double constraint_compatibility(const SecondOrderDAE& sys, const PodBasis& basis) {
  if (sys.num_constraints() == 0) return 0.0;
  if (sys.G.cols() != basis.Vr.rows()) throw Error("basis and system dimensions disagree");
  return (sys.G * basis.Vr).norm() / sys.G.norm();
}

CompressedData compress(const SnapshotSet& snaps, const PodBasis& basis) {
  if (snaps.X.rows() != basis.Vr.rows()) throw Error("basis and snapshot dimensions disagree");
  CompressedData data;
  data.Xr = basis.Vr.transpose() * snaps.X;
  data.Xdr = basis.Vr.transpose() * snaps.Xd;
  data.Xddr = basis.Vr.transpose() * snaps.Xdd;
  data.U = snaps.U;
  data.Y = snaps.Y;
  data.basis = basis;
  return data;
}

std::string singular_value_csv(const PodBasis& basis) {
  std::string out = "index,sigma,cum_energy\n";
  for (Index i = 0; i < basis.singular_values.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',' + format_double(basis.singular_values(i));
    out += ',' + format_double(basis.cum_energy(i));
    out += '\n';
  }
  return out;
}

void save_basis(const std::filesystem::path& dir, const PodBasis& basis) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json meta;
  meta["source"] = basis.source == PodSource::displacement ? "displacement" : "velocity";
  meta["r"] = basis.r();
  write_file_atomic(dir / "basis.json", meta.dump(2) + "\n");
  write_matrix_market(dir / "Vr.mtx", basis.Vr);
  write_matrix_market(dir / "singular_values.mtx", basis.singular_values);
  write_matrix_market(dir / "cum_energy.mtx", basis.cum_energy);
  write_file_atomic(dir / "energy.csv", singular_value_csv(basis));
}

PodBasis load_basis(const std::filesystem::path& dir) {
  PodBasis basis;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / "basis.json"));
    const std::string source = meta.at("source").get<std::string>();
    if (source == "displacement") {
      basis.source = PodSource::displacement;
    } else if (source == "velocity") {
      basis.source = PodSource::velocity;
    } else {
      throw ArtifactError("unknown basis source '" + source + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("cannot parse " + (dir / "basis.json").string() + ": " + e.what());
  }
  basis.Vr = read_matrix_market(dir / "Vr.mtx");
  auto read_column = [&](const char* name) -> Vector {
    Matrix a = read_matrix_market(dir / name);
    if (a.cols() != 1) throw ArtifactError(std::string(name) + " in " + dir.string() +
                                           " is not a column vector");
    return a.col(0);
  };
  basis.singular_values = read_column("singular_values.mtx");
  basis.cum_energy = read_column("cum_energy.mtx");
  if (basis.cum_energy.size() != basis.singular_values.size()) {
    throw ArtifactError("basis artifact sizes disagree in " + dir.string());
  }
  return basis;
}

}  // namespace opinf
