#include "rbas/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "rbas/problems.hpp"

namespace rbas {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

void check_indices(const IndexList& idx, Eigen::Index extent, const char* what) {
    if (idx.empty()) throw std::invalid_argument(std::string(what) + ": empty index list");
    std::unordered_set<Eigen::Index> seen;
    for (const auto i : idx) {
        if (i < 0 || i >= extent) throw std::invalid_argument(std::string(what) + ": index out of range");
        if (!seen.insert(i).second) throw std::invalid_argument(std::string(what) + ": duplicate index");
    }
}

void append_ranges(std::ostringstream& out, const IndexList& idx) {
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && idx[j + 1] == idx[j] + 1) ++j;
        if (i) out << ';';
        out << idx[i] + 1;
        if (j > i) out << '-' << idx[j] + 1;
        i = j + 1;
    }
}

Vector gather(const Vector& v, const IndexList& idx) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(Eigen::Index(i)) = v(idx[i]);
    return out;
}

Matrix gather_rows(const Matrix& a, const IndexList& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(Eigen::Index(i)) = a.row(idx[i]);
    return out;
}

Matrix gather_cols(const Matrix& a, const IndexList& idx) {
    Matrix out(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out.col(Eigen::Index(i)) = a.col(idx[i]);
    return out;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

Matrix nonzero_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix w = gaussian_matrix(rows, cols, rng);
    while (w.isZero(0.0)) w = gaussian_matrix(rows, cols, rng);
    return w;
}

}  // namespace

Side side_of(const Selector& sel) {
    return std::visit(overloaded{
                          [](const RowIndices&) { return Side::Row; },
                          [](const DenseRows&) { return Side::Row; },
                          [](const Streamed&) { return Side::Row; },
                          [](const ColIndices&) { return Side::Col; },
                          [](const DenseCols&) { return Side::Col; },
                      },
                      sel);
}

void validate_selector(const Selector& sel, Eigen::Index n, Eigen::Index d) {
    std::visit(overloaded{
                   [&](const RowIndices& s) { check_indices(s.idx, n, "RowIndices"); },
                   [&](const ColIndices& s) { check_indices(s.idx, d, "ColIndices"); },
                   [&](const DenseRows& s) {
                       if (s.w.rows() != n || s.w.cols() < 1 || s.w.isZero(0.0))
                           throw std::invalid_argument("DenseRows: need a nonzero n x p matrix");
                   },
                   [&](const DenseCols& s) {
                       if (s.w.rows() != d || s.w.cols() < 1 || s.w.isZero(0.0))
                           throw std::invalid_argument("DenseCols: need a nonzero d x p matrix");
                   },
                   [&](const Streamed& s) {
                       if (s.alpha.rows() != d || s.alpha.cols() < 1 || s.beta.size() != s.alpha.cols())
                           throw std::invalid_argument("Streamed: need alpha d x p and beta of length p");
                   },
               },
               sel);
}

std::string describe(const Selector& sel) {
    std::ostringstream out;
    std::visit(overloaded{
                   [&](const RowIndices& s) { out << 'r'; append_ranges(out, s.idx); },
                   [&](const ColIndices& s) { out << 'c'; append_ranges(out, s.idx); },
                   [&](const DenseRows& s) { out << "W(" << s.w.rows() << 'x' << s.w.cols() << ')'; },
                   [&](const DenseCols& s) { out << "W(" << s.w.rows() << 'x' << s.w.cols() << ')'; },
                   [&](const Streamed& s) { out << "S(" << s.alpha.rows() << 'x' << s.alpha.cols() << ')'; },
               },
               sel);
    return out.str();
}

std::size_t encoded_size(const SamplerState& state) {
    return std::visit(overloaded{
                          [](const NoState&) -> std::size_t { return 0; },
                          [](const CycleState&) -> std::size_t { return 2 * sizeof(std::uint64_t); },
                          [](const PermutationState& s) -> std::size_t {
                              return (s.order.size() + 1) * sizeof(std::uint64_t);
                          },
                          [](const EnsembleState&) -> std::size_t { return sizeof(std::uint64_t); },
                          [](const StreamState&) -> std::size_t { return sizeof(std::uint64_t); },
                      },
                      state);
}

// ---------------------------------------------------------------------------

GaussianMixingSource::GaussianMixingSource(LinearSystem base, Eigen::Index width,
                                           std::uint64_t seed, std::uint64_t limit)
    : base_(std::move(base)), width_(width), rng_(seed), limit_(limit) {
    if (width < 1) throw std::invalid_argument("streaming source: block width must be positive");
    if (!base_.consistent()) throw std::invalid_argument("streaming source: base system must be consistent");
}

std::optional<StreamDraw> GaussianMixingSource::next() {
    if (limit_ != 0 && drawn_ >= limit_) return std::nullopt;
    ++drawn_;
    const Matrix w = nonzero_gaussian(base_.rows(), width_, rng_);
    return StreamDraw{base_.A().transpose() * w, w.transpose() * base_.b()};
}

std::unique_ptr<StreamSource> streaming_source(const LinearSystem& base, Eigen::Index width,
                                               std::uint64_t seed) {
    return std::make_unique<GaussianMixingSource>(base, width, seed);
}

// ---------------------------------------------------------------------------

const std::vector<MethodInfo>& method_registry() {
    static const std::vector<MethodInfo> registry = {
        {Method::CyclicVectorKaczmarz, "cyclic_vector_kaczmarz", Side::Row, false},
        {Method::GaussianVectorKaczmarz, "gaussian_vector_kaczmarz", Side::Row, false},
        {Method::StrohmerVershynin, "strohmer_vershynin", Side::Row, false},
        {Method::SteinerbergerVector, "steinerberger_vector", Side::Row, false},
        {Method::Motzkin, "motzkin", Side::Row, false},
        {Method::Agmon, "agmon", Side::Row, false},
        {Method::GreedyRandomizedVector, "greedy_randomized_vector", Side::Row, false},
        {Method::SamplingKaczmarzMotzkin, "sampling_kaczmarz_motzkin", Side::Row, false},
        {Method::StreamingVector, "streaming_vector", Side::Row, false},
        {Method::CyclicVectorCd, "cyclic_vector_cd", Side::Col, false},
        {Method::GaussianVectorCs, "gaussian_vector_cs", Side::Col, false},
        {Method::ZouziasFrerisVectorCd, "zouzias_freris_vector_cd", Side::Col, false},
        {Method::MaxResidualVectorCd, "max_residual_vector_cd", Side::Col, false},
        {Method::MaxDistanceVectorCd, "max_distance_vector_cd", Side::Col, false},
        {Method::RandomPermutationBlockKaczmarz, "random_permutation_block_kaczmarz", Side::Row, true},
        {Method::SteinerbergerBlock, "steinerberger_block", Side::Row, true},
        {Method::MotzkinBlock, "motzkin_block", Side::Row, true},
        {Method::AgmonBlock, "agmon_block", Side::Row, true},
        {Method::AdaptiveSketchProject, "adaptive_sketch_project", Side::Row, false},
        {Method::GreedyRandomizedBlock, "greedy_randomized_block", Side::Row, true},
        {Method::StreamingBlock, "streaming_block", Side::Row, false},
        {Method::RandomPermutationBlockCd, "random_permutation_block_cd", Side::Col, true},
        {Method::GaussianBlockCs, "gaussian_block_cs", Side::Col, false},
        {Method::ZouziasFrerisBlockCd, "zouzias_freris_block_cd", Side::Col, true},
        {Method::MaxResidualBlockCd, "max_residual_block_cd", Side::Col, true},
        {Method::MaxDistanceBlockCd, "max_distance_block_cd", Side::Col, true},
        {Method::GreedyBlockSelection, "greedy_block_selection", Side::Row, true},
        {Method::CyclicBlockKaczmarz, "cyclic_block_kaczmarz", Side::Row, true},
    };
    return registry;
}

const MethodInfo& method_info(const std::string& name) {
    for (const auto& m : method_registry())
        if (name == m.name) return m;
    throw std::invalid_argument("unknown sampler '" + name + "'");
}

const MethodInfo& method_info(Method method) {
    for (const auto& m : method_registry())
        if (m.method == method) return m;
    throw std::invalid_argument("unregistered method");
}

// ---------------------------------------------------------------------------

std::size_t argmax_first(const Vector& scores) {
    if (scores.size() == 0) throw std::invalid_argument("argmax_first: empty scores");
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        if (std::isnan(scores(i))) continue;
        if (best < 0 || scores(i) > scores(best)) best = i;
    }
    return best < 0 ? 0 : static_cast<std::size_t>(best);
}

std::vector<std::size_t> greedy_threshold_set(const Vector& r, const LinearSystem& sys,
                                              const std::optional<Partition>& partition,
                                              Side side) {
    Vector s;  // the vector the scores are built from
    Vector norms_sq;
    if (side == Side::Row) {
        if (r.size() != sys.rows()) throw std::invalid_argument("greedy_threshold_set: residual length");
        s = r;
        norms_sq = sys.row_norms_sq();
    } else {
        if (r.size() != sys.rows()) throw std::invalid_argument("greedy_threshold_set: residual length");
        s = sys.A().transpose() * r;
        norms_sq = sys.col_norms_sq();
    }
    const double total = s.squaredNorm();
    if (total == 0.0) throw std::invalid_argument("greedy_threshold_set: zero residual");

    Vector scores;
    if (!partition) {
        scores = Vector::Constant(s.size(), kMinusInf);
        for (Eigen::Index j = 0; j < s.size(); ++j)
            if (norms_sq(j) > 0.0) scores(j) = s(j) * s(j) / (total * norms_sq(j));
    } else {
        if (partition->side != side) throw std::invalid_argument("greedy_threshold_set: partition side");
        const auto k = static_cast<Eigen::Index>(partition->size());
        scores = Vector::Constant(k, kMinusInf);
        for (Eigen::Index j = 0; j < k; ++j) {
            double num = 0.0, den = 0.0;
            for (const auto i : partition->blocks[std::size_t(j)]) {
                num += s(i) * s(i);
                den += norms_sq(i);
            }
            if (den > 0.0) scores(j) = num / (total * den);
        }
    }
    const double eps = 0.5 * scores.maxCoeff() + 0.5 / sys.frobenius_sq();
    const double cut = eps * (1.0 - 1e-12);
    std::vector<std::size_t> out;
    for (Eigen::Index j = 0; j < scores.size(); ++j)
        if (scores(j) >= cut) out.push_back(static_cast<std::size_t>(j));
    if (out.empty()) throw std::domain_error("greedy_threshold_set: empty set");
    return out;
}

RowIndices skm_select(const Vector& r, std::size_t sample_size, Rng& rng) {
    const auto n = static_cast<std::size_t>(r.size());
    if (sample_size < 1 || sample_size > n) throw std::invalid_argument("skm_select: need 1 <= sample_size <= n");
    // Partial Fisher-Yates for the sample.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < sample_size; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
    std::sort(idx.begin(), idx.begin() + std::ptrdiff_t(sample_size));
    std::size_t best = idx[0];
    for (std::size_t i = 1; i < sample_size; ++i)
        if (std::abs(r(Eigen::Index(idx[i]))) > std::abs(r(Eigen::Index(best)))) best = idx[i];
    return RowIndices{{static_cast<Eigen::Index>(best)}};
}

RowIndices skm_select(const Vector& r, std::size_t sample_size, std::uint64_t seed) {
    Rng rng(seed);
    return skm_select(r, sample_size, rng);
}

double sketch_project_score(const Vector& x, const Matrix& s, const LinearSystem& sys) {
    if (s.rows() != sys.rows()) throw std::invalid_argument("sketch_project_score: sketch has wrong row count");
    const Vector sr = s.transpose() * sys.residual(x);
    const Matrix sa = s.transpose() * sys.A();
    return std::max(0.0, sr.dot(pinv_apply(sa * sa.transpose(), sr)));
}

// ---------------------------------------------------------------------------

MetricTransform::MetricTransform(const Matrix& b) {
    if (b.rows() != b.cols() || b.rows() == 0) throw std::invalid_argument("MetricTransform: B must be square");
    require_finite(b, "MetricTransform B");
    if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("MetricTransform: B is not symmetric");
    Eigen::LLT<Matrix> llt(b);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("MetricTransform: B is not positive definite");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(b);
    const Vector lambda = eig.eigenvalues();
    if (lambda.minCoeff() <= 0.0) throw std::invalid_argument("MetricTransform: B is not positive definite");
    const Matrix& v = eig.eigenvectors();
    sqrt_ = v * lambda.cwiseSqrt().asDiagonal() * v.transpose();
    inv_sqrt_ = v * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
}

LinearSystem MetricTransform::transform(const LinearSystem& sys) const {
    if (sys.cols() != sqrt_.rows()) throw std::invalid_argument("MetricTransform: dimension mismatch");
    return LinearSystem(sys.A() * inv_sqrt_, sys.b());
}

// ---------------------------------------------------------------------------

const SketchEnsemble* Sampler::ensemble() const {
    if (const auto* e = std::get_if<EnsembleState>(&state_)) return e->ensemble.get();
    return nullptr;
}

Selector Sampler::block_selector(std::size_t block) const {
    const auto& idx = partition_->blocks[block];
    if (partition_->side == Side::Row) return RowIndices{idx};
    return ColIndices{idx};
}

std::size_t Sampler::sample_weighted(const Vector& weights) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i)
        if (weights(i) > 0.0) total += weights(i);
    if (!(total > 0.0)) return 0;
    const double u = rng_->uniform() * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        if (!(weights(i) > 0.0)) continue;
        acc += weights(i);
        last = static_cast<std::size_t>(i);
        if (u < acc) return last;
    }
    return last;
}

Selector Sampler::next(const Vector& x, const Vector& r) {
    const LinearSystem& sys = *sys_;
    if (r.size() != sys.rows()) throw std::invalid_argument("Sampler::next: residual has wrong length");
    if (x.size() != sys.cols()) throw std::invalid_argument("Sampler::next: iterate has wrong length");
    const Matrix& a = sys.A();

    auto cycle = [&]() {
        auto& c = std::get<CycleState>(state_);
        const auto pos = c.position;
        c.position = (c.position + 1) % c.period;
        return pos;
    };
    auto block_norms = [&](const Vector& v, double p) {
        Vector out(static_cast<Eigen::Index>(partition_->size()));
        for (std::size_t j = 0; j < partition_->size(); ++j) {
            double acc = 0.0;
            for (const auto i : partition_->blocks[j])
                acc += p == 2.0 ? v(i) * v(i) : std::pow(std::abs(v(i)), p);
            out(Eigen::Index(j)) = acc;
        }
        return out;
    };
    auto row = [](std::size_t i) { return Selector{RowIndices{{static_cast<Eigen::Index>(i)}}}; };
    auto col = [](std::size_t i) { return Selector{ColIndices{{static_cast<Eigen::Index>(i)}}}; };
    auto stream = [&]() {
        auto draw = source_->next();
        if (!draw) throw std::runtime_error("streaming source exhausted");
        std::get<StreamState>(state_).draws++;
        return Selector{Streamed{std::move(draw->alpha), std::move(draw->beta)}};
    };

    switch (info_->method) {
    case Method::CyclicVectorKaczmarz:
        return row(cycle());
    case Method::CyclicVectorCd:
        return col(cycle());
    case Method::CyclicBlockKaczmarz:
        return block_selector(cycle());
    case Method::GaussianVectorKaczmarz:
        return DenseRows{nonzero_gaussian(sys.rows(), 1, *rng_)};
    case Method::GaussianVectorCs:
        return DenseCols{nonzero_gaussian(sys.cols(), 1, *rng_)};
    case Method::GaussianBlockCs:
        return DenseCols{nonzero_gaussian(sys.cols(), *spec_.block_width, *rng_)};
    case Method::StrohmerVershynin:
        return row(sample_weighted(sys.row_norms_sq()));
    case Method::SteinerbergerVector: {
        const double p = spec_.p_exponent;
        return row(sample_weighted(r.cwiseAbs().unaryExpr([p](double v) { return p == 2.0 ? v * v : std::pow(v, p); })));
    }
    case Method::Motzkin: {
        Vector scores = Vector::Constant(r.size(), kMinusInf);
        for (Eigen::Index j = 0; j < r.size(); ++j)
            if (sys.row_norms_sq()(j) > 0.0) scores(j) = std::abs(r(j)) / sys.row_norms_sq()(j);
        return row(argmax_first(scores));
    }
    case Method::Agmon:
        return row(argmax_first(r.cwiseAbs()));
    case Method::GreedyRandomizedVector: {
        if (r.isZero(0.0)) return row(0);
        const auto u = greedy_threshold_set(r, sys, std::nullopt, Side::Row);
        Vector w = Vector::Zero(r.size());
        for (const auto j : u) w(Eigen::Index(j)) = r(Eigen::Index(j)) * r(Eigen::Index(j));
        return row(sample_weighted(w));
    }
    case Method::SamplingKaczmarzMotzkin:
        return skm_select(r, *spec_.sample_size, *rng_);
    case Method::StreamingVector:
    case Method::StreamingBlock:
        return stream();
    case Method::ZouziasFrerisVectorCd:
        return col(sample_weighted(sys.col_norms_sq()));
    case Method::MaxResidualVectorCd:
        return col(argmax_first((a.transpose() * r).cwiseAbs()));
    case Method::MaxDistanceVectorCd: {
        const Vector g = a.transpose() * r;
        Vector scores = Vector::Constant(g.size(), kMinusInf);
        for (Eigen::Index j = 0; j < g.size(); ++j)
            if (normal_col_norms_sq_(j) > 0.0) scores(j) = std::abs(g(j)) / normal_col_norms_sq_(j);
        return col(argmax_first(scores));
    }
    case Method::RandomPermutationBlockKaczmarz:
    case Method::RandomPermutationBlockCd: {
        auto& s = std::get<PermutationState>(state_);
        if (s.counter == s.order.size()) {
            shuffle(s.order, *rng_);
            s.counter = 0;
        }
        return block_selector(s.order[s.counter++]);
    }
    case Method::SteinerbergerBlock:
        return block_selector(sample_weighted(block_norms(r, spec_.p_exponent)));
    case Method::MotzkinBlock:
    case Method::MaxDistanceBlockCd: {
        const Vector v = info_->side == Side::Row ? r : Vector(a.transpose() * r);
        Vector scores(static_cast<Eigen::Index>(partition_->size()));
        for (std::size_t j = 0; j < partition_->size(); ++j)
            scores(Eigen::Index(j)) = (block_gram_pinv_[j] * gather(v, partition_->blocks[j])).norm();
        return block_selector(argmax_first(scores));
    }
    case Method::AgmonBlock:
    case Method::GreedyBlockSelection:
        return block_selector(argmax_first(block_norms(r, 2.0)));
    case Method::MaxResidualBlockCd:
        return block_selector(argmax_first(block_norms(a.transpose() * r, 2.0)));
    case Method::GreedyRandomizedBlock: {
        if (r.isZero(0.0)) return block_selector(0);
        const auto u = greedy_threshold_set(r, sys, partition_, Side::Row);
        const Vector norms = block_norms(r, 2.0);
        Vector w = Vector::Zero(norms.size());
        for (const auto j : u) w(Eigen::Index(j)) = norms(Eigen::Index(j));
        return block_selector(sample_weighted(w));
    }
    case Method::ZouziasFrerisBlockCd:
        return block_selector(sample_weighted(block_frobenius_sq_));
    case Method::AdaptiveSketchProject: {
        const auto& e = *std::get<EnsembleState>(state_).ensemble;
        Vector scores(static_cast<Eigen::Index>(e.size()));
        for (std::size_t j = 0; j < e.size(); ++j) {
            const Vector sr = e.matrices[j].transpose() * r;
            scores(Eigen::Index(j)) = sr.dot(block_gram_pinv_[j] * sr);
        }
        return DenseRows{e.matrices[argmax_first(scores)]};
    }
    }
    throw std::logic_error("Sampler::next: unhandled method");
}

Sampler make_sampler(const SamplerSpec& spec, const LinearSystem& sys,
                     std::shared_ptr<StreamSource> source) {
    Sampler s;
    s.info_ = &method_info(spec.name);
    s.spec_ = spec;
    s.sys_ = sys;
    s.rng_ = std::make_shared<Rng>(derive_seed(spec.seed, 0));
    const Method m = s.info_->method;
    const Matrix& a = sys.A();

    if (s.info_->needs_partition) {
        if (!spec.partition) throw std::invalid_argument(std::string(spec.name) + ": missing parameter 'partition'");
        s.partition_ = make_partition(sys, s.info_->side, *spec.partition);
    }
    if ((m == Method::SteinerbergerVector || m == Method::SteinerbergerBlock) && !(spec.p_exponent >= 1.0))
        throw std::invalid_argument(spec.name + ": p must be >= 1");

    switch (m) {
    case Method::CyclicVectorKaczmarz:
        s.state_ = CycleState{0, std::size_t(sys.rows())};
        break;
    case Method::CyclicVectorCd:
        s.state_ = CycleState{0, std::size_t(sys.cols())};
        break;
    case Method::CyclicBlockKaczmarz:
        s.state_ = CycleState{0, s.partition_->size()};
        break;
    case Method::RandomPermutationBlockKaczmarz:
    case Method::RandomPermutationBlockCd: {
        PermutationState p;
        p.order.resize(s.partition_->size());
        std::iota(p.order.begin(), p.order.end(), 0);
        p.counter = p.order.size();  // shuffled on first use
        s.state_ = std::move(p);
        break;
    }
    case Method::SamplingKaczmarzMotzkin:
        if (!spec.sample_size) throw std::invalid_argument(spec.name + ": missing parameter 'sample_size'");
        if (*spec.sample_size < 1 || *spec.sample_size > std::size_t(sys.rows()))
            throw std::invalid_argument(spec.name + ": sample_size must be in [1, n]");
        break;
    case Method::GaussianBlockCs:
        if (!spec.block_width) throw std::invalid_argument(spec.name + ": missing parameter 'block_width'");
        if (*spec.block_width < 1) throw std::invalid_argument(spec.name + ": block_width must be positive");
        break;
    case Method::StreamingVector:
    case Method::StreamingBlock: {
        Eigen::Index width = 1;
        if (m == Method::StreamingBlock) {
            if (!spec.block_width) throw std::invalid_argument(spec.name + ": missing parameter 'block_width'");
            width = *spec.block_width;
            if (width < 1) throw std::invalid_argument(spec.name + ": block_width must be positive");
        }
        if (source) {
            if (source->dim() != sys.cols()) throw std::invalid_argument(spec.name + ": stream dimension mismatch");
            s.source_ = std::move(source);
        } else {
            s.source_ = std::make_shared<GaussianMixingSource>(sys, width, derive_seed(spec.seed, 1));
        }
        s.state_ = StreamState{};
        break;
    }
    case Method::MaxDistanceVectorCd:
        s.normal_col_norms_sq_ = (a.transpose() * a).colwise().squaredNorm().transpose();
        break;
    case Method::MotzkinBlock:
        for (const auto& block : s.partition_->blocks) {
            const Matrix ab = gather_rows(a, block);
            s.block_gram_pinv_.push_back(pseudo_inverse(ab * ab.transpose()));
        }
        break;
    case Method::MaxDistanceBlockCd:
        for (const auto& block : s.partition_->blocks) {
            const Matrix ab = gather_cols(a, block);
            s.block_gram_pinv_.push_back(pseudo_inverse(ab.transpose() * ab));
        }
        break;
    case Method::ZouziasFrerisBlockCd: {
        s.block_frobenius_sq_.resize(static_cast<Eigen::Index>(s.partition_->size()));
        for (std::size_t j = 0; j < s.partition_->size(); ++j) {
            double acc = 0.0;
            for (const auto i : s.partition_->blocks[j]) acc += sys.col_norms_sq()(i);
            s.block_frobenius_sq_(Eigen::Index(j)) = acc;
        }
        break;
    }
    case Method::AdaptiveSketchProject: {
        if (!spec.sketch) throw std::invalid_argument(spec.name + ": missing parameter 'sketch'");
        const auto& sk = *spec.sketch;
        if (sk.params.p < 1 || sk.params.epsilon < 1)
            throw std::invalid_argument(spec.name + ": sketch p and epsilon must be positive");
        auto ensemble = std::make_shared<SketchEnsemble>(
            draw_ensemble(sys.rows(), sk.params, sk.distribution, derive_seed(spec.seed, 2)));
        for (const auto& sm : ensemble->matrices) {
            const Matrix sa = sm.transpose() * a;
            s.block_gram_pinv_.push_back(pseudo_inverse(sa * sa.transpose()));
        }
        s.state_ = EnsembleState{std::move(ensemble)};
        break;
    }
    default:
        break;
    }
    return s;
}

}  // namespace rbas
