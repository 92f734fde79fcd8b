#pragma once

// Hand-rolled generators and independent reference computations for the
// property tests. References use Eigen decompositions the library does not
// use for the same job (complete orthogonal decomposition, normal equations).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "rbas/problems.hpp"
#include "rbas/rng.hpp"
#include "rbas/samplers.hpp"
#include "rbas/system.hpp"

namespace testing {

using rbas::Matrix;
using rbas::Vector;

struct Gen {
    rbas::Rng rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    Eigen::Index size(Eigen::Index lo, Eigen::Index hi) {
        return lo + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
    }
    Matrix gaussian(Eigen::Index r, Eigen::Index c) { return rbas::gaussian_matrix(r, c, rng); }
    Vector vec(Eigen::Index n) { return rbas::gaussian_vector(n, rng); }

    /// Rank-`rank` n x d matrix as a product of Gaussian factors.
    Matrix low_rank(Eigen::Index n, Eigen::Index d, Eigen::Index rank) {
        return gaussian(n, rank) * gaussian(rank, d);
    }

    /// Random shape with n, d in [1, max_dim] and a random rank in [1, min(n, d)].
    rbas::LinearSystem system(Eigen::Index max_dim, bool consistent) {
        const Eigen::Index n = size(1, max_dim), d = size(1, max_dim);
        const Eigen::Index rank = size(1, std::min(n, d));
        const Matrix a = low_rank(n, d, rank);
        Vector b = a * vec(d);
        if (!consistent) b += vec(n);
        return rbas::LinearSystem(a, b);
    }
};

/// Pseudo-inverse via complete orthogonal decomposition.
inline Matrix cod_pinv(const Matrix& m) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(m);
    cod.setThreshold(1e-10);
    return cod.pseudoInverse();
}

/// Orthogonal projector onto col(M) via the COD pseudo-inverse.
inline Matrix col_projector(const Matrix& m) { return m * cod_pinv(m); }

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// A valid spec for any registered method on `sys`: two blocks (or one when
/// the side has a single index), sample size and block width 2 capped by the
/// system, Gaussian sketches with p = 2.
inline rbas::SamplerSpec default_spec(const std::string& name, const rbas::LinearSystem& sys, std::uint64_t seed) {
    rbas::SamplerSpec s;
    s.name = name;
    s.seed = seed;
    const auto& info = rbas::method_info(name);
    const Eigen::Index extent = info.side == rbas::Side::Row ? sys.rows() : sys.cols();
    if (info.needs_partition) s.partition = rbas::EqualBlocks{extent >= 2 ? 2u : 1u};
    s.sample_size = static_cast<std::size_t>(std::min<Eigen::Index>(2, sys.rows()));
    s.block_width = 2;
    rbas::SketchSpec sk;
    sk.distribution = rbas::SketchDistribution::Gaussian;
    sk.params.p = 2;
    sk.params.epsilon = 4;
    s.sketch = sk;
    return s;
}

}  // namespace testing
