#pragma once

// Dense kernels shared by every other module: pseudo-inverse application,
// rank-revealing orthonormal bases, Gram determinants and incremental span
// tracking. Storage is Eigen's column-major MatrixXd.

#include <cstdint>
#include <stdexcept>
#include <Eigen/Dense>

#include "rbas/rng.hpp"

namespace rbas {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Non-finite values appeared during a computation.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Relative singular-value cutoff used by pinv_apply.
inline constexpr double kSvdRankTol = 1e-12;
/// Relative |R_ii| / |R_11| cutoff used by pivoted QR rank decisions.
inline constexpr double kQrRankTol = 1e-10;

/// Throws std::invalid_argument if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);
void require_finite(const Vector& v, const char* what);

/// Numerical rank from the singular values, cutoff tol * sigma_max.
Eigen::Index numerical_rank(const Matrix& m, double tol = kSvdRankTol);

/// Returns M^+ r, the minimum-norm least-squares solution of M z ~ r.
/// Singular values at or below kSvdRankTol * sigma_max are treated as zero.
Vector pinv_apply(const Matrix& m, const Vector& r);

/// M^+ as an explicit matrix, same cutoff as pinv_apply.
Matrix pseudo_inverse(const Matrix& m);

/// A set of orthonormal vectors stored as the columns of a matrix.
class OrthonormalBasis {
public:
    OrthonormalBasis() = default;
    /// Empty basis of the given ambient dimension.
    explicit OrthonormalBasis(Eigen::Index ambient_dim) : q_(ambient_dim, 0) {}

    /// Validating constructor: columns must be orthonormal to 1e-10.
    static OrthonormalBasis from_columns(Matrix q);

    Eigen::Index ambient_dim() const { return q_.rows(); }
    Eigen::Index size() const { return q_.cols(); }
    bool empty() const { return q_.cols() == 0; }
    const Matrix& vectors() const { return q_; }

    /// Q Q^T.
    Matrix projector() const { return q_ * q_.transpose(); }

private:
    struct Trusted {};
    OrthonormalBasis(Matrix q, Trusted) : q_(std::move(q)) {}
    friend OrthonormalBasis orthonormal_basis(const Matrix&, double);
    friend OrthonormalBasis random_orthonormal_basis(const OrthonormalBasis&, std::uint64_t);
    friend OrthonormalBasis rotate_basis(const OrthonormalBasis&, const Matrix&);

    Matrix q_;
};

/// Orthonormal basis of col(M); the count equals the numerical rank at tol
/// (column-pivoted QR, |R_ii| <= tol * |R_11| treated as zero).
OrthonormalBasis orthonormal_basis(const Matrix& m, double tol = kQrRankTol);

/// Haar-distributed orthogonal k x k matrix (Gaussian QR with sign fix).
Matrix haar_orthogonal(Eigen::Index k, Rng& rng);

/// Haar-uniform rotation of the basis within its own span.
OrthonormalBasis random_orthonormal_basis(const OrthonormalBasis& subspace, std::uint64_t seed);

/// Q * R for an orthogonal R of matching size (not validated beyond shape).
OrthonormalBasis rotate_basis(const OrthonormalBasis& basis, const Matrix& rotation);

/// det(G^T G) as the product of squared R diagonals of a Householder QR.
/// Zero whenever G has more columns than rows.
double gram_det(const Matrix& g);

/// Incrementally grown orthonormal basis answering span-membership queries.
/// contains(v) is true iff ||v - Q Q^T v|| <= tol * ||v|| (and for v = 0).
class SpanTracker {
public:
    explicit SpanTracker(Eigen::Index ambient_dim, double tol = 1e-10);

    bool contains(const Vector& v) const;
    /// Adds v to the span; no-op when v is already contained.
    /// Returns true if the basis grew.
    bool insert(const Vector& v);
    void clear();

    Eigen::Index ambient_dim() const { return ambient_dim_; }
    Eigen::Index dimension() const { return count_; }
    double tol() const { return tol_; }
    OrthonormalBasis basis() const;

private:
    Vector residual_of(const Vector& v) const;

    Eigen::Index ambient_dim_;
    double tol_;
    Matrix q_;
    Eigen::Index count_ = 0;
};

}  // namespace rbas
