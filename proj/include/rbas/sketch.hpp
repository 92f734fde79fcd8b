#pragma once

// Johnson-Lindenstrauss sketch ensembles for adaptive sketch-and-project.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rbas/linalg.hpp"

namespace rbas {

enum class SketchDistribution { Gaussian, Achlioptas };

const char* to_string(SketchDistribution dist);
SketchDistribution sketch_distribution_from_string(const std::string& name);

/// C, w: distribution constants of the JL property. rho: confidence exponent.
/// p: embedding dimension. epsilon: ensemble size.
struct JlParams {
    double C = 0.0;
    double w = 0.0;
    double rho = 0.0;
    std::size_t p = 0;
    std::size_t epsilon = 0;
};

/// Constants of the sparse {+1, 0, -1} sketch.
inline constexpr double kAchlioptasC = 0.23467;
inline constexpr double kAchlioptasW = 0.1127;

/// Smallest integer p with p > (rho + 1) ln 2 / (0.999 C) * max(1/0.999, w).
std::size_t jl_min_embedding_dim(double C, double w, double rho);

/// The threshold that jl_min_embedding_dim must strictly exceed.
double jl_embedding_threshold(double C, double w, double rho);

/// 2^(-epsilon * rho).
double jl_failure_bound(double rho, double epsilon);

/// Achlioptas preset: C and w filled in, p from jl_min_embedding_dim.
JlParams achlioptas_params(double rho, std::size_t epsilon);

/// epsilon independent n x p matrices, scaled so that E||S^T r||^2 = ||r||^2.
struct SketchEnsemble {
    std::vector<Matrix> matrices;
    SketchDistribution distribution = SketchDistribution::Gaussian;
    JlParams params;
    std::uint64_t seed = 0;

    std::size_t size() const { return matrices.size(); }
    Eigen::Index rows() const { return matrices.empty() ? 0 : matrices.front().rows(); }
};

/// Gaussian entries are N(0, 1/p). Achlioptas entries are +-sqrt(3/p) with
/// probability 1/6 each and 0 otherwise. Matrix j uses seed derive_seed(seed, j).
SketchEnsemble draw_ensemble(Eigen::Index n, const JlParams& params, SketchDistribution dist,
                             std::uint64_t seed);

/// Long-format dump: one "matrix,row,col,value" line per entry.
void write_ensemble_csv(const std::filesystem::path& path, const SketchEnsemble& ensemble);
SketchEnsemble read_ensemble_csv(const std::filesystem::path& path);

}  // namespace rbas
