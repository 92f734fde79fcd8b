#pragma once

// Meany constants: the smallest Gram determinant over maximal linearly
// independent subsets of a collection of unit vectors, and estimates of its
// supremum over the choice of orthonormal bases for given subspaces.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rbas/linalg.hpp"
#include "rbas/system.hpp"

namespace rbas {

inline constexpr std::size_t kMeanyDefaultCap = 20;

/// Exhaustive min of det(G^T G) over subsets G of size rank(vectors) that are
/// linearly independent (pivoted QR at `tol`). Near-duplicate vectors (equal
/// up to sign within `tol`) are merged first. Throws std::invalid_argument if
/// a column is not unit norm, or if more than `cap` distinct vectors remain.
double maximal_independent_gram_min(const Matrix& vectors, double tol = kQrRankTol,
                                    std::size_t cap = kMeanyDefaultCap);

/// The min above over the concatenated basis vectors.
double meany_constant(const std::vector<OrthonormalBasis>& bases, std::size_t cap = kMeanyDefaultCap);

enum class BasisDraw {
    /// QR of (generators * G) with G square standard Gaussian.
    GeneratorMixing,
    /// Haar-uniform rotation of an orthonormal basis of the span.
    Haar,
};
const char* to_string(BasisDraw draw);

struct MeanyOptions {
    std::size_t samples = 10000;
    std::uint64_t seed = 0;
    BasisDraw draw = BasisDraw::GeneratorMixing;
    /// Also evaluate the principal-vector aligned bases.
    bool aligned_candidates = true;
    std::size_t cap = kMeanyDefaultCap;
};

inline const std::array<double, 7> kMeanyQuantileLevels = {0.001, 0.05, 0.25, 0.5, 0.75, 0.95, 0.999};

struct MeanyEstimate {
    std::vector<double> samples;  // one min-det per random draw, in draw order
    double sample_max = 0.0;      // max(samples)
    double aligned = 0.0;         // best aligned candidate (0 when not evaluated)
    double sup_observed = 0.0;    // max(sample_max, aligned): a lower bound on the sup
    double mean = 0.0;
    double stddev = 0.0;
    std::array<double, 7> quantiles{};  // at kMeanyQuantileLevels, type-7 interpolation
};

/// Type-7 (linear interpolation) quantile of unsorted data.
double quantile(std::vector<double> data, double level);

/// Each subspace is given by generating columns (any spanning set). Sample s
/// redraws subspace i with seed derive_seed(derive_seed(seed, tag_i), s),
/// where tag_i = `tags[i]` (defaults to i).
MeanyEstimate meany_sup_estimate(const std::vector<Matrix>& generators, const MeanyOptions& options,
                                 const std::vector<std::uint64_t>& tags = {});
MeanyEstimate meany_sup_estimate(const std::vector<OrthonormalBasis>& subspaces,
                                 const MeanyOptions& options);

/// Bases built from principal vectors: for every pair (i, j) of subspaces,
/// subspace i uses its principal vectors towards j and vice versa, with
/// directions shared by both (cosine >= 1 - tol) made identical. Remaining
/// subspaces keep their QR bases. Returns the largest meany_constant.
double aligned_meany_candidate(const std::vector<OrthonormalBasis>& subspaces,
                               std::size_t cap = kMeanyDefaultCap, double tol = 1e-10);

enum class GammaMethod { RandomSearch, Exact1D };
const char* to_string(GammaMethod method);

struct GammaReport {
    std::string partition_id;
    double gamma = 1.0;
    double sup_observed = 0.0;
    std::size_t basis_samples = 0;
    std::uint64_t seed = 0;
    GammaMethod method = GammaMethod::RandomSearch;
};

/// gamma = 1 - sup_observed, with the sup over bases of the row spaces of the
/// partition's blocks. When every block has row rank <= 1 the sup is exact.
/// Random draws are seeded from the block contents, so reordering the blocks
/// does not change the result.
GammaReport gamma_for_partition(const LinearSystem& sys, const Partition& partition,
                                const MeanyOptions& options, const std::string& id = "");

/// ||y_after||^2 <= (1 - meany_constant(bases)) ||y_before||^2 + slack.
bool verify_meany_bound(const Vector& y_before, const Vector& y_after,
                        const std::vector<OrthonormalBasis>& bases, double slack = 1e-8);

/// "# rbas-meany v1" with columns q0.001,...,q0.999,sup,mean,std,samples.
std::string meany_table_csv(const MeanyEstimate& est);
/// "# rbas-gamma v1" with columns partition,gamma,sup_observed,method,samples,seed.
std::string gamma_table_csv(const std::vector<GammaReport>& reports);

}  // namespace rbas
