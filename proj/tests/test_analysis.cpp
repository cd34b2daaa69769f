#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "opinf/analysis.hpp"
#include "opinf/matrixmarket.hpp"
#include "opinf/models.hpp"

using namespace opinf;

namespace {

Matrix random_dense(Index rows, Index cols, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist;
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = dist(gen);
  return a;
}

TimeGrid grid_for(Index columns) {
  TimeGrid grid;
  grid.dt = 0.1;
  grid.steps = columns - 1;
  return grid;
}

}  // namespace

TEST_SUITE("relative_error") {
  TEST_CASE("identical trajectories give all zeros") {
    const Matrix y = random_dense(3, 40, 1);
    const ErrorSeries s = relative_error(y, y, grid_for(40));
    CHECK(s.eps_y.isZero(0.0));
    CHECK(s.max_eps == 0.0);
    CHECK(s.times.size() == 40);
    CHECK(s.times[1] == doctest::Approx(0.1));
  }

  TEST_CASE("zero reduced output peaks at one") {
    const Matrix y = random_dense(2, 60, 2);
    const Matrix zero = Matrix::Zero(2, 60);
    const ErrorSeries s = relative_error(y, zero, grid_for(60));
    CHECK(s.max_eps == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.normalization == doctest::Approx(y.colwise().squaredNorm().maxCoeff()));
    CHECK(s.eps_y.minCoeff() >= 0.0);
  }

  TEST_CASE("matches a direct scalar reimplementation") {
    const Matrix y = random_dense(4, 50, 3);
    const Matrix yr = y + 0.1 * random_dense(4, 50, 4);
    const ErrorSeries s = relative_error(y, yr, grid_for(50));

    double peak = 0.0;
    for (Index j = 0; j < 50; ++j) {
      double total = 0.0;
      for (Index i = 0; i < 4; ++i) total += y(i, j) * y(i, j);
      peak = std::max(peak, total);
    }
    for (Index j = 0; j < 50; ++j) {
      double dev = 0.0;
      for (Index i = 0; i < 4; ++i) {
        const double d = y(i, j) - yr(i, j);
        dev += d * d;
      }
      CHECK(s.eps_y[j] == doctest::Approx(dev / peak).epsilon(1e-13));
    }
    CHECK(s.max_eps == s.eps_y.maxCoeff());
  }

  TEST_CASE("scaling both trajectories leaves the series unchanged") {
    const Matrix y = random_dense(3, 30, 5);
    const Matrix yr = y + 0.05 * random_dense(3, 30, 6);
    const ErrorSeries base = relative_error(y, yr, grid_for(30));

    const ErrorSeries doubled = relative_error(2.0 * y, 2.0 * yr, grid_for(30));
    CHECK(doubled.eps_y == base.eps_y);
    CHECK(doubled.max_eps == base.max_eps);

    const ErrorSeries scaled = relative_error(3.0 * y, 3.0 * yr, grid_for(30));
    CHECK((scaled.eps_y - base.eps_y).cwiseAbs().maxCoeff() <= 1e-14);
  }

  TEST_CASE("all-zero reference is rejected") {
    const Matrix zero = Matrix::Zero(2, 10);
    CHECK_THROWS_AS(relative_error(zero, zero, grid_for(10)), Error);
  }

  TEST_CASE("shape mismatches are rejected") {
    const Matrix y = random_dense(2, 10, 7);
    CHECK_THROWS_AS(relative_error(y, random_dense(3, 10, 8), grid_for(10)), Error);
    CHECK_THROWS_AS(relative_error(y, random_dense(2, 11, 9), grid_for(10)), Error);
    CHECK_THROWS_AS(relative_error(y, y, grid_for(12)), Error);
  }
}

TEST_SUITE("report bundle") {
  TEST_CASE("csv writers produce the documented headers") {
    const Matrix y = random_dense(2, 20, 11);
    const Matrix yr = y + 0.01 * random_dense(2, 20, 12);
    const TimeGrid grid = grid_for(20);
    const ErrorSeries s = relative_error(y, yr, grid);

    const std::string err_csv = error_series_csv(s);
    CHECK(err_csv.substr(0, err_csv.find('\n')) == "t,eps_y");
    CHECK(std::count(err_csv.begin(), err_csv.end(), '\n') == 21);

    const std::string pair_csv = paired_output_csv(grid, y, yr, 1);
    CHECK(pair_csv.substr(0, pair_csv.find('\n')) == "t,y_fom,y_rom");
    CHECK(std::count(pair_csv.begin(), pair_csv.end(), '\n') == 21);
    CHECK_THROWS_AS(paired_output_csv(grid, y, yr, 2), Error);
  }

  TEST_CASE("comparison bundle contains every artifact") {
    const SecondOrderDAE sys = build_anchored_chain(24, 1.0, 40.0, 0.8);
    TimeGrid grid;
    grid.dt = 0.02;
    grid.steps = 150;
    const SnapshotSet train = newmark_dae(sys, grid, impulse_signal(80.0, 0.4));
    const SnapshotSet test = newmark_dae(sys, grid, harmonic_signal(5.0, 1.1));

    const PodBasis basis = build_basis(train, sys.kind, TruncationRule::fixed(4));
    const ReducedModel rom = intrusive_reduce(sys, basis);
    const RomTrajectory rom_train = newmark_ode(rom, grid, impulse_signal(80.0, 0.4));
    const RomTrajectory rom_test = newmark_ode(rom, grid, harmonic_signal(5.0, 1.1));

    const auto dir = std::filesystem::temp_directory_path() / "opinf_test_report";
    std::filesystem::remove_all(dir);
    write_comparison_report(dir, basis, rom, train, rom_train, test, rom_test);

    for (const char* name :
         {"energy.csv", "train_error.csv", "test_error.csv", "train_output_1.csv",
          "train_output_2.csv", "train_output_3.csv", "test_output_1.csv", "test_output_2.csv",
          "test_output_3.csv", "summary.json", "plots.gp"}) {
      CHECK(std::filesystem::exists(dir / name));
    }

    const std::string summary = read_file(dir / "summary.json");
    CHECK(summary.find("\"schema\": 1") != std::string::npos);
    CHECK(summary.find("\"r\": 4") != std::string::npos);
    CHECK(summary.find("\"provenance\": \"intrusive\"") != std::string::npos);
    CHECK(summary.find("max_training_error") != std::string::npos);
    CHECK(summary.find("max_test_error") != std::string::npos);
    CHECK(summary.find("\"solver\"") != std::string::npos);

    const auto copy = std::filesystem::temp_directory_path() / "opinf_test_report_copy";
    std::filesystem::remove_all(copy);
    write_comparison_report(copy, basis, rom, train, rom_train, test, rom_test);
    CHECK(read_file(dir / "summary.json") == read_file(copy / "summary.json"));
    CHECK(read_file(dir / "test_error.csv") == read_file(copy / "test_error.csv"));
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(copy);
  }
}
