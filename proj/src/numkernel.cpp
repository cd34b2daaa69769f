#include "opinf/numkernel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace opinf {

bool all_finite(const Matrix& a) { return a.allFinite(); }

void require_finite(const Matrix& a, const char* what) {
    if (!a.allFinite()) {
        throw Error(std::string(what) + " contains non-finite entries");
    }
}

Index numerical_rank(const Vector& singular_values, double rel_tol) {
    if (singular_values.size() == 0) {
        return 0;
    }
    const double cutoff = rel_tol * singular_values(0);
    Index rank = 0;
    for (Index i = 0; i < singular_values.size(); ++i) {
        if (singular_values(i) > cutoff) {
            ++rank;
        }
    }
    return rank;
}

SvdResult thin_svd(const Matrix& a) {
    if (a.size() == 0) {
        throw std::invalid_argument("thin_svd: matrix is empty");
    }
    require_finite(a, "thin_svd input");
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        throw ConvergenceError("thin_svd: bidiagonal SVD iteration did not converge",
                               30 * std::min(a.rows(), a.cols()));
    }
    return SvdResult{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

EigResult sym_eig(const Matrix& s) {
    if (s.rows() != s.cols()) {
        throw std::invalid_argument("sym_eig: matrix is not square");
    }
    if (s.size() == 0) {
        throw std::invalid_argument("sym_eig: matrix is empty");
    }
    require_finite(s, "sym_eig input");
    const double norm = s.norm();
    const double defect = (s - s.transpose()).norm();
    if (defect > 1e-8 * std::max(norm, 1e-300)) {
        throw Error("sym_eig: symmetry defect " + std::to_string(defect) +
                    " exceeds 1e-8 relative tolerance");
    }
    const Matrix sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw ConvergenceError("sym_eig: tridiagonal QL iteration did not converge",
                               30 * s.rows());
    }
    return EigResult{eig.eigenvectors(), eig.eigenvalues()};
}

namespace {

// Locates the first failing pivot of an unpivoted Cholesky factorization.
// Only used to produce a diagnostic after Eigen's LLT has already failed.
long failing_cholesky_pivot(const Matrix& s) {
    const Index n = s.rows();
    Matrix l = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        double diag = s(j, j);
        for (Index k = 0; k < j; ++k) {
            diag -= l(j, k) * l(j, k);
        }
        if (!(diag > 0.0)) {
            return static_cast<long>(j);
        }
        l(j, j) = std::sqrt(diag);
        for (Index i = j + 1; i < n; ++i) {
            double v = s(i, j);
            for (Index k = 0; k < j; ++k) {
                v -= l(i, k) * l(j, k);
            }
            l(i, j) = v / l(j, j);
        }
    }
    return static_cast<long>(n);
}

}  // namespace

SpdSolver::SpdSolver(const Matrix& s) : s_(0.5 * (s + s.transpose())) {
    if (s.rows() != s.cols()) {
        throw std::invalid_argument("SpdSolver: matrix is not square");
    }
    require_finite(s, "SpdSolver input");
    llt_.compute(s_);
    if (llt_.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("matrix not positive definite",
                                       failing_cholesky_pivot(s_));
    }
}

Matrix SpdSolver::solve(const Matrix& rhs) const {
    Matrix z = llt_.solve(rhs);
    // One refinement pass keeps the residual well below the 1e-9 contract.
    z += llt_.solve(rhs - s_ * z);
    return z;
}

Vector SpdSolver::solve(const Vector& rhs) const {
    Vector z = llt_.solve(rhs);
    z += llt_.solve(rhs - s_ * z);
    return z;
}

Matrix solve_spd(const Matrix& s, const Matrix& rhs) {
    if (s.rows() != rhs.rows()) {
        throw std::invalid_argument("solve_spd: dimension mismatch");
    }
    return SpdSolver(s).solve(rhs);
}

SaddlePointSolver::SaddlePointSolver(const Matrix& s, const Matrix& g)
    : n_(s.rows()), nc_(g.rows()) {
    if (s.rows() != s.cols()) {
        throw std::invalid_argument("SaddlePointSolver: S is not square");
    }
    if (g.cols() != n_) {
        throw std::invalid_argument("SaddlePointSolver: G has wrong column count");
    }
    require_finite(s, "saddle-point S");
    if (nc_ == 0) {
        llt_.compute(0.5 * (s + s.transpose()));
        if (llt_.info() != Eigen::Success) {
            throw NotPositiveDefiniteError("matrix not positive definite",
                                           failing_cholesky_pivot(0.5 * (s + s.transpose())));
        }
        kkt_ = s;
        return;
    }
    require_finite(g, "saddle-point G");
    if (nc_ >= n_) {
        throw std::invalid_argument("SaddlePointSolver: more constraints than unknowns");
    }
    {
        Eigen::BDCSVD<Matrix> svd(g);
        const Vector& sv = svd.singularValues();
        const Index rank = numerical_rank(sv, 1e-10);
        if (rank < nc_) {
            throw RankDeficiencyError("constraint Jacobian rank-deficient", rank);
        }
    }
    kkt_.setZero(n_ + nc_, n_ + nc_);
    kkt_.topLeftCorner(n_, n_) = s;
    kkt_.topRightCorner(n_, nc_) = g.transpose();
    kkt_.bottomLeftCorner(nc_, n_) = g;
    lu_.compute(kkt_);
}

std::pair<Vector, Vector> SaddlePointSolver::solve(const Vector& f, const Vector& g_rhs) const {
    if (f.size() != n_ || g_rhs.size() != nc_) {
        throw std::invalid_argument("SaddlePointSolver::solve: right-hand side size mismatch");
    }
    if (nc_ == 0) {
        Vector a = llt_.solve(f);
        a += llt_.solve(f - kkt_ * a);
        return {a, Vector::Zero(0)};
    }
    Vector rhs(n_ + nc_);
    rhs.head(n_) = f;
    rhs.tail(nc_) = g_rhs;
    Vector sol = lu_.solve(rhs);
    sol += lu_.solve(rhs - kkt_ * sol);
    const double res = (kkt_ * sol - rhs).norm();
    const double scale = std::max(rhs.norm(), kkt_.norm() * sol.norm());
    if (!sol.allFinite() || res > 1e-9 * std::max(scale, 1e-300)) {
        throw Error("saddle-point solve failed: relative residual " +
                    std::to_string(res / std::max(scale, 1e-300)));
    }
    return {sol.head(n_), sol.tail(nc_)};
}

std::pair<Vector, Vector> solve_saddle(const Matrix& s, const Matrix& g, const Vector& f,
                                       const Vector& g_rhs) {
    return SaddlePointSolver(s, g).solve(f, g_rhs);
}

Matrix kernel_basis(const Matrix& g) {
    const Index n = g.cols();
    const Index nc = g.rows();
    if (n == 0) {
        throw std::invalid_argument("kernel_basis: G has no columns");
    }
    if (nc == 0) {
        return Matrix::Identity(n, n);
    }
    if (nc >= n) {
        throw std::invalid_argument("kernel_basis: expected fewer constraint rows than columns");
    }
    require_finite(g, "kernel_basis input");
    Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const Index rank = numerical_rank(sv, 1e-10);
    if (rank < nc) {
        throw RankDeficiencyError("constraint Jacobian rank-deficient", rank);
    }
    return svd.matrixV().rightCols(n - nc);
}

Matrix psd_project(const Matrix& s) {
    if (s.rows() != s.cols()) {
        throw std::invalid_argument("psd_project: matrix is not square");
    }
    const Matrix sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw ConvergenceError("psd_project: eigendecomposition did not converge", 30 * s.rows());
    }
    const Vector clipped = eig.eigenvalues().cwiseMax(0.0);
    Matrix out = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

Vector simplex_project(const Vector& v, double total) {
    if (total < 0.0) {
        throw std::invalid_argument("simplex_project: negative target sum");
    }
    const Index n = v.size();
    std::vector<double> sorted(v.data(), v.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (Index i = 0; i < n; ++i) {
        cumulative += sorted[static_cast<size_t>(i)];
        const double candidate = (cumulative - total) / static_cast<double>(i + 1);
        if (i + 1 == n || sorted[static_cast<size_t>(i + 1)] <= candidate) {
            theta = candidate;
            break;
        }
    }
    return (v.array() - theta).cwiseMax(0.0);
}

Matrix psd_project_with_trace(const Matrix& s, double trace) {
    if (s.rows() != s.cols()) {
        throw std::invalid_argument("psd_project_with_trace: matrix is not square");
    }
    const Matrix sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw ConvergenceError("psd_project_with_trace: eigendecomposition did not converge",
                               30 * s.rows());
    }
    const Vector lam = simplex_project(eig.eigenvalues(), trace);
    Matrix out = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

}  // namespace opinf
