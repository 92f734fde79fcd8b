#pragma once

// Selection procedures for the row-action (Kaczmarz family) and column-action
// (coordinate/column-space descent) solvers. A Sampler turns the current
// iterate and residual into the next selector W_k and updates its own bounded
// state.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rbas/sketch.hpp"
#include "rbas/system.hpp"

namespace rbas {

using IndexList = std::vector<Eigen::Index>;

/// W = E_I restricted to the listed rows.
struct RowIndices {
    IndexList idx;
};
/// W = E_J restricted to the listed columns.
struct ColIndices {
    IndexList idx;
};
/// Dense W in R^{n x p}.
struct DenseRows {
    Matrix w;
};
/// Dense W in R^{d x p}.
struct DenseCols {
    Matrix w;
};
/// A streamed block of equations alpha^T x = beta with alpha in R^{d x p}.
/// It plays the role of A^T W and W^T b for a W the solver never sees.
struct Streamed {
    Matrix alpha;
    Vector beta;
};

using Selector = std::variant<RowIndices, ColIndices, DenseRows, DenseCols, Streamed>;

/// Side addressed by the selector (Streamed counts as Row).
Side side_of(const Selector& sel);

/// Throws std::invalid_argument if the selector is empty, out of bounds,
/// has duplicates, or is an all-zero dense matrix.
void validate_selector(const Selector& sel, Eigen::Index n, Eigen::Index d);

/// Compact text form: "r3", "r1;4", "c2", "W(5x1)", "S(3x2)". Indices are 1-based.
std::string describe(const Selector& sel);

// ---------------------------------------------------------------------------
// Sampler state (the memory zeta_k). Every payload has a size fixed at
// construction.

struct NoState {};
struct CycleState {
    std::size_t position = 0;
    std::size_t period = 0;
};
struct PermutationState {
    std::vector<std::size_t> order;  // current epoch
    std::size_t counter = 0;         // next slot in `order`
};
struct EnsembleState {
    std::shared_ptr<const SketchEnsemble> ensemble;
};
struct StreamState {
    std::uint64_t draws = 0;
};

using SamplerState = std::variant<NoState, CycleState, PermutationState, EnsembleState, StreamState>;

/// Bytes needed to serialize the state. Constant over a run.
std::size_t encoded_size(const SamplerState& state);

// ---------------------------------------------------------------------------
// Streams of equations

struct StreamDraw {
    Matrix alpha;  // d x p
    Vector beta;   // p
};

class StreamSource {
public:
    virtual ~StreamSource() = default;
    /// std::nullopt once exhausted.
    virtual std::optional<StreamDraw> next() = 0;
    virtual Eigen::Index dim() const = 0;
};

/// alpha = A^T W, beta = W^T b with W an n x p standard Gaussian, drawn fresh
/// for every call. `limit` = 0 means unbounded.
class GaussianMixingSource final : public StreamSource {
public:
    GaussianMixingSource(LinearSystem base, Eigen::Index width, std::uint64_t seed,
                         std::uint64_t limit = 0);
    std::optional<StreamDraw> next() override;
    Eigen::Index dim() const override { return base_.cols(); }

private:
    LinearSystem base_;
    Eigen::Index width_;
    Rng rng_;
    std::uint64_t limit_;
    std::uint64_t drawn_ = 0;
};

std::unique_ptr<StreamSource> streaming_source(const LinearSystem& base, Eigen::Index width,
                                               std::uint64_t seed);

// ---------------------------------------------------------------------------
// Specs and the registry

enum class Method {
    CyclicVectorKaczmarz,
    GaussianVectorKaczmarz,
    StrohmerVershynin,
    SteinerbergerVector,
    Motzkin,
    Agmon,
    GreedyRandomizedVector,
    SamplingKaczmarzMotzkin,
    StreamingVector,
    CyclicVectorCd,
    GaussianVectorCs,
    ZouziasFrerisVectorCd,
    MaxResidualVectorCd,
    MaxDistanceVectorCd,
    RandomPermutationBlockKaczmarz,
    SteinerbergerBlock,
    MotzkinBlock,
    AgmonBlock,
    AdaptiveSketchProject,
    GreedyRandomizedBlock,
    StreamingBlock,
    RandomPermutationBlockCd,
    GaussianBlockCs,
    ZouziasFrerisBlockCd,
    MaxResidualBlockCd,
    MaxDistanceBlockCd,
    GreedyBlockSelection,
    CyclicBlockKaczmarz,
};

struct MethodInfo {
    Method method;
    const char* name;
    Side side;
    bool needs_partition;
};

/// Every registered method, in declaration order.
const std::vector<MethodInfo>& method_registry();
/// Throws std::invalid_argument for unknown names.
const MethodInfo& method_info(const std::string& name);
const MethodInfo& method_info(Method method);

struct SketchSpec {
    SketchDistribution distribution = SketchDistribution::Achlioptas;
    JlParams params;  // p and epsilon must be >= 1
};

struct SamplerSpec {
    std::string name;
    std::optional<PartitionScheme> partition;
    double p_exponent = 2.0;                 // Steinerberger methods
    std::optional<std::size_t> sample_size;  // sampling Kaczmarz-Motzkin
    std::optional<Eigen::Index> block_width; // Gaussian block and streaming block
    std::optional<SketchSpec> sketch;        // adaptive sketch-and-project
    std::uint64_t seed = 0;
};

class Sampler {
public:
    /// Selector for the iterate x with residual r = Ax - b.
    Selector next(const Vector& x, const Vector& r);

    const SamplerState& state() const { return state_; }
    const MethodInfo& info() const { return *info_; }
    Side side() const { return info_->side; }
    const std::optional<Partition>& partition() const { return partition_; }
    const SketchEnsemble* ensemble() const;

    /// Streaming methods only: the source feeding the selector.
    bool streaming() const { return source_ != nullptr; }

private:
    friend Sampler make_sampler(const SamplerSpec&, const LinearSystem&,
                                std::shared_ptr<StreamSource>);
    Sampler() = default;

    Selector block_selector(std::size_t block) const;
    std::size_t sample_weighted(const Vector& weights);

    const MethodInfo* info_ = nullptr;
    SamplerSpec spec_;
    std::optional<LinearSystem> sys_;
    std::optional<Partition> partition_;
    SamplerState state_;
    std::shared_ptr<Rng> rng_;
    std::shared_ptr<StreamSource> source_;
    // Per-block data, filled for the methods that need it.
    std::vector<Matrix> block_gram_pinv_;  // (E^T A A^T E)^+ or (E^T A^T A E)^+
    Vector block_frobenius_sq_;            // ||A^T E_j||_F^2 (row) or ||A E_j||_F^2 (col)
    Vector normal_col_norms_sq_;           // ||A^T A e_j||^2
};

/// Validates the spec against the system. Throws std::invalid_argument for an
/// unknown name, a missing or invalid parameter, or a partition that does not
/// fit the system. `source` overrides the built-in Gaussian mixing stream.
Sampler make_sampler(const SamplerSpec& spec, const LinearSystem& sys,
                     std::shared_ptr<StreamSource> source = nullptr);

// ---------------------------------------------------------------------------
// Selection rules exposed for testing and reuse

/// Greedy randomized threshold set. Vector form (partition empty): scores
/// r_j^2 / (||r||^2 ||A^T e_j||^2); block form uses ||E_j^T r||^2 and
/// ||A^T E_j||_F^2. The threshold is half the largest score plus
/// 1 / (2 ||A||_F^2). Returns 0-based row (or block) ids. Throws
/// std::invalid_argument on a zero residual.
std::vector<std::size_t> greedy_threshold_set(const Vector& r, const LinearSystem& sys,
                                              const std::optional<Partition>& partition,
                                              Side side);

/// Uniform sample of `sample_size` distinct rows, then the largest |r_j|
/// within it (ties to the smallest index).
RowIndices skm_select(const Vector& r, std::size_t sample_size, Rng& rng);
RowIndices skm_select(const Vector& r, std::size_t sample_size, std::uint64_t seed);

/// f_j = (S^T r)^T (S^T A A^T S)^+ (S^T r) with r = Ax - b.
double sketch_project_score(const Vector& x, const Matrix& s, const LinearSystem& sys);

/// Index of the largest entry; ties go to the smallest index. Entries that
/// are NaN are never selected. Throws on empty input.
std::size_t argmax_first(const Vector& scores);

/// Change of inner product for sketch-and-project with an SPD matrix B. The
/// solver iterates x = B^{1/2} z on the system with coefficient matrix
/// A B^{-1/2}; z is the variable of the original system.
class MetricTransform {
public:
    /// Throws std::invalid_argument unless B is symmetric positive definite.
    explicit MetricTransform(const Matrix& b);

    LinearSystem transform(const LinearSystem& sys) const;
    Vector to_solver(const Vector& z) const { return sqrt_ * z; }
    Vector to_original(const Vector& x) const { return inv_sqrt_ * x; }

private:
    Matrix sqrt_, inv_sqrt_;
};

}  // namespace rbas
