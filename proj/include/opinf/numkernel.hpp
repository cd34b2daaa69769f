#pragma once

#include <Eigen/Dense>

#include <utility>

#include "opinf/errors.hpp"

namespace opinf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// True if every entry is a normal, subnormal or zero floating-point value.
bool all_finite(const Matrix& a);

/// Throws opinf::Error naming `what` if the matrix contains NaN or Inf.
void require_finite(const Matrix& a, const char* what);

/// Number of singular values above rel_tol times the largest one.
Index numerical_rank(const Vector& singular_values, double rel_tol);

/// Thin singular value decomposition A = U diag(s) W^T.
///
/// U is rows x q and W is cols x q with q = min(rows, cols); the singular
/// values are non-increasing and nonnegative.
struct SvdResult {
    Matrix u;
    Vector singular_values;
    Matrix w;
};

SvdResult thin_svd(const Matrix& a);

/// Eigendecomposition S = Q diag(values) Q^T of a symmetric matrix.
/// Eigenvalues are in ascending order; Q has orthonormal columns.
struct EigResult {
    Matrix q;
    Vector values;
};

/// Requires the symmetry defect ||S - S^T||_F <= 1e-8 ||S||_F; the matrix is
/// symmetrized internally before factorization.
EigResult sym_eig(const Matrix& s);

/// Cholesky solver for symmetric positive definite systems, factored once.
class SpdSolver {
public:
    explicit SpdSolver(const Matrix& s);

    Matrix solve(const Matrix& rhs) const;
    Vector solve(const Vector& rhs) const;

    Index dimension() const noexcept { return llt_.matrixLLT().rows(); }

private:
    Eigen::LLT<Matrix> llt_;
    Matrix s_;
};

/// One-shot SPD solve; see SpdSolver for the factor-once variant.
Matrix solve_spd(const Matrix& s, const Matrix& rhs);

/// Direct solver for the symmetric saddle-point system
///
///   [ S  G^T ] [ a   ]   [ f ]
///   [ G   0  ] [ lam ] = [ g ]
///
/// S must be positive definite on ker(G) and G must have full row rank.
/// The factorization is computed once so that repeated solves (one per time
/// step) reuse it. Zero constraint rows reduce to a plain SPD solve.
class SaddlePointSolver {
public:
    SaddlePointSolver(const Matrix& s, const Matrix& g);

    /// Solves for (a, lam); performs one step of iterative refinement and
    /// verifies the block residuals to 1e-9 relative.
    std::pair<Vector, Vector> solve(const Vector& f, const Vector& g_rhs) const;

    Index dimension() const noexcept { return n_; }
    Index constraint_count() const noexcept { return nc_; }

private:
    Index n_ = 0;
    Index nc_ = 0;
    Matrix kkt_;
    Eigen::PartialPivLU<Matrix> lu_;
    Eigen::LLT<Matrix> llt_;  // used when nc_ == 0
};

std::pair<Vector, Vector> solve_saddle(const Matrix& s, const Matrix& g, const Vector& f,
                                       const Vector& g_rhs);

/// Orthonormal basis N of ker(G) with G N = 0; for a full-row-rank G with
/// n_c rows and n columns the result has n - n_c columns. A G with zero rows
/// yields the identity.
Matrix kernel_basis(const Matrix& g);

/// Frobenius-nearest symmetric positive semidefinite matrix: symmetrize,
/// clip negative eigenvalues to zero, recompose.
Matrix psd_project(const Matrix& s);

/// Frobenius-nearest symmetric PSD matrix with the prescribed trace
/// (eigenvalues are projected onto the simplex {v >= 0, sum v = trace}).
Matrix psd_project_with_trace(const Matrix& s, double trace);

/// Euclidean projection of v onto {w >= 0, sum w = total}, total >= 0.
Vector simplex_project(const Vector& v, double total);

}  // namespace opinf
