#include "rbas/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rbas {

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

Eigen::Index numerical_rank(const Matrix& m, double tol) {
    if (m.size() == 0) return 0;
    Eigen::BDCSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > tol * s(0)) ++r;
    return r;
}

Vector pinv_apply(const Matrix& m, const Vector& r) {
    if (r.size() != m.rows()) {
        throw std::invalid_argument("pinv_apply: rhs length " + std::to_string(r.size()) +
                                    " != rows " + std::to_string(m.rows()));
    }
    if (m.cols() == 0 || m.rows() == 0 || m.isZero(0.0)) return Vector::Zero(m.cols());
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(kSvdRankTol);
    return svd.solve(r);
}

Matrix pseudo_inverse(const Matrix& m) {
    if (m.size() == 0 || m.isZero(0.0)) return Matrix::Zero(m.cols(), m.rows());
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(kSvdRankTol);
    return svd.solve(Matrix::Identity(m.rows(), m.rows()));
}

OrthonormalBasis OrthonormalBasis::from_columns(Matrix q) {
    require_finite(q, "OrthonormalBasis");
    const Matrix gram = q.transpose() * q;
    const Matrix eye = Matrix::Identity(q.cols(), q.cols());
    if (q.cols() > 0 && (gram - eye).cwiseAbs().maxCoeff() > 1e-10) {
        throw std::invalid_argument("OrthonormalBasis: columns are not orthonormal");
    }
    return OrthonormalBasis(std::move(q), Trusted{});
}

OrthonormalBasis orthonormal_basis(const Matrix& m, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("orthonormal_basis: tol must be positive");
    if (m.cols() == 0 || m.isZero(0.0)) return OrthonormalBasis(m.rows());
    Eigen::ColPivHouseholderQR<Matrix> qr(m);
    qr.setThreshold(tol);
    const Eigen::Index rank = qr.rank();
    Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), rank);
    return OrthonormalBasis(std::move(q), OrthonormalBasis::Trusted{});
}

Matrix haar_orthogonal(Eigen::Index k, Rng& rng) {
    Matrix g(k, k);
    for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index i = 0; i < k; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix& r = qr.matrixQR();
    for (Eigen::Index i = 0; i < k; ++i) {
        if (r(i, i) < 0.0) q.col(i) *= -1.0;
    }
    return q;
}

OrthonormalBasis random_orthonormal_basis(const OrthonormalBasis& subspace, std::uint64_t seed) {
    if (subspace.empty()) throw std::invalid_argument("random_orthonormal_basis: empty subspace");
    Rng rng(seed);
    return rotate_basis(subspace, haar_orthogonal(subspace.size(), rng));
}

OrthonormalBasis rotate_basis(const OrthonormalBasis& basis, const Matrix& rotation) {
    if (rotation.rows() != basis.size() || rotation.cols() != basis.size()) {
        throw std::invalid_argument("rotate_basis: rotation size mismatch");
    }
    return OrthonormalBasis(basis.vectors() * rotation, OrthonormalBasis::Trusted{});
}

double gram_det(const Matrix& g) {
    if (g.cols() == 0) return 1.0;
    if (g.cols() > g.rows()) return 0.0;
    Eigen::HouseholderQR<Matrix> qr(g);
    const Matrix& r = qr.matrixQR();
    double det = 1.0;
    for (Eigen::Index i = 0; i < g.cols(); ++i) det *= r(i, i) * r(i, i);
    return det;
}

SpanTracker::SpanTracker(Eigen::Index ambient_dim, double tol)
    : ambient_dim_(ambient_dim), tol_(tol), q_(ambient_dim, ambient_dim) {
    if (!(tol > 0.0)) throw std::invalid_argument("SpanTracker: tol must be positive");
}

Vector SpanTracker::residual_of(const Vector& v) const {
    Vector res = v;
    if (count_ == 0) return res;
    const auto q = q_.leftCols(count_);
    // Classical Gram-Schmidt applied twice.
    for (int pass = 0; pass < 2; ++pass) res -= q * (q.transpose() * res);
    return res;
}

bool SpanTracker::contains(const Vector& v) const {
    if (v.size() != ambient_dim_) throw std::invalid_argument("SpanTracker: dimension mismatch");
    const double nv = v.norm();
    if (nv == 0.0) return true;
    return residual_of(v).norm() <= tol_ * nv;
}

bool SpanTracker::insert(const Vector& v) {
    if (contains(v) || count_ == ambient_dim_) return false;
    Vector res = residual_of(v);
    q_.col(count_) = res / res.norm();
    ++count_;
    return true;
}

void SpanTracker::clear() { count_ = 0; }

OrthonormalBasis SpanTracker::basis() const {
    return OrthonormalBasis::from_columns(q_.leftCols(count_));
}

}  // namespace rbas
