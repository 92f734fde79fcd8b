#include "rbas/meany.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rbas/problems.hpp"
#include "rbas/text_io.hpp"

namespace rbas {

namespace {

Matrix merge_duplicates(const Matrix& v, double tol) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        bool dup = false;
        for (const auto i : keep) {
            const double diff = std::min((v.col(j) - v.col(i)).norm(), (v.col(j) + v.col(i)).norm());
            if (diff <= tol) {
                dup = true;
                break;
            }
        }
        if (!dup) keep.push_back(j);
    }
    Matrix out(v.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) out.col(Eigen::Index(i)) = v.col(keep[i]);
    return out;
}

Matrix concat(const std::vector<OrthonormalBasis>& bases) {
    if (bases.empty()) return Matrix(0, 0);
    const Eigen::Index dim = bases.front().ambient_dim();
    Eigen::Index total = 0;
    for (const auto& b : bases) {
        if (b.ambient_dim() != dim) throw std::invalid_argument("meany_constant: bases differ in ambient dimension");
        total += b.size();
    }
    Matrix out(dim, total);
    Eigen::Index at = 0;
    for (const auto& b : bases) {
        out.middleCols(at, b.size()) = b.vectors();
        at += b.size();
    }
    return out;
}

OrthonormalBasis draw_basis(const Matrix& generators, const OrthonormalBasis& span, BasisDraw draw,
                            std::uint64_t seed) {
    if (span.empty()) return span;
    if (draw == BasisDraw::Haar) return random_orthonormal_basis(span, seed);
    Rng rng(seed);
    const Matrix mixed = generators * gaussian_matrix(generators.cols(), generators.cols(), rng);
    if (span.size() == generators.cols()) {
        Eigen::HouseholderQR<Matrix> qr(mixed);
        Matrix q = qr.householderQ() * Matrix::Identity(mixed.rows(), mixed.cols());
        return OrthonormalBasis::from_columns(std::move(q));
    }
    return orthonormal_basis(mixed);
}

void summarize(MeanyEstimate& est) {
    const auto& s = est.samples;
    if (s.empty()) return;
    est.sample_max = *std::max_element(s.begin(), s.end());
    est.sup_observed = std::max(est.sample_max, est.aligned);
    est.mean = std::accumulate(s.begin(), s.end(), 0.0) / double(s.size());
    double acc = 0.0;
    for (const double v : s) acc += (v - est.mean) * (v - est.mean);
    est.stddev = s.size() > 1 ? std::sqrt(acc / double(s.size() - 1)) : 0.0;
    for (std::size_t i = 0; i < kMeanyQuantileLevels.size(); ++i)
        est.quantiles[i] = quantile(s, kMeanyQuantileLevels[i]);
}

}  // namespace

double maximal_independent_gram_min(const Matrix& vectors, double tol, std::size_t cap) {
    require_finite(vectors, "maximal_independent_gram_min");
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        if (std::abs(vectors.col(j).norm() - 1.0) > 1e-10)
            throw std::invalid_argument("maximal_independent_gram_min: column " + std::to_string(j + 1) +
                                        " is not a unit vector");
    }
    const Matrix v = merge_duplicates(vectors, tol);
    const auto m = static_cast<std::size_t>(v.cols());
    if (m > cap) {
        throw std::invalid_argument("maximal_independent_gram_min: " + std::to_string(m) +
                                    " distinct vectors exceed the cap of " + std::to_string(cap) +
                                    "; use a random-search estimate instead");
    }
    if (m == 0) return 1.0;
    Eigen::ColPivHouseholderQR<Matrix> full(v);
    full.setThreshold(tol);
    const auto r = static_cast<std::size_t>(full.rank());
    if (r == m) return gram_det(v);

    // Walk all r-subsets in lexicographic order.
    std::vector<std::size_t> pick(r);
    std::iota(pick.begin(), pick.end(), 0);
    Matrix g(v.rows(), static_cast<Eigen::Index>(r));
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        for (std::size_t i = 0; i < r; ++i) g.col(Eigen::Index(i)) = v.col(Eigen::Index(pick[i]));
        Eigen::ColPivHouseholderQR<Matrix> qr(g);
        qr.setThreshold(tol);
        if (static_cast<std::size_t>(qr.rank()) == r) {
            double det = 1.0;
            for (Eigen::Index i = 0; i < g.cols(); ++i) det *= qr.matrixQR()(i, i) * qr.matrixQR()(i, i);
            best = std::min(best, det);
        }
        std::size_t i = r;
        while (i > 0 && pick[i - 1] == m - r + i - 1) --i;
        if (i == 0) break;
        ++pick[i - 1];
        for (std::size_t j = i; j < r; ++j) pick[j] = pick[j - 1] + 1;
    }
    return best;
}

double meany_constant(const std::vector<OrthonormalBasis>& bases, std::size_t cap) {
    return maximal_independent_gram_min(concat(bases), kQrRankTol, cap);
}

const char* to_string(BasisDraw draw) {
    return draw == BasisDraw::GeneratorMixing ? "generator_mixing" : "haar";
}

double quantile(std::vector<double> data, double level) {
    if (data.empty()) throw std::invalid_argument("quantile: no data");
    if (level < 0.0 || level > 1.0) throw std::invalid_argument("quantile: level outside [0, 1]");
    std::sort(data.begin(), data.end());
    const double h = double(data.size() - 1) * level;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, data.size() - 1);
    return data[lo] + (h - double(lo)) * (data[hi] - data[lo]);
}

double aligned_meany_candidate(const std::vector<OrthonormalBasis>& subspaces, std::size_t cap, double tol) {
    if (subspaces.size() < 2) return meany_constant(subspaces, cap);
    double best = 0.0;
    for (std::size_t i = 0; i < subspaces.size(); ++i) {
        for (std::size_t j = i + 1; j < subspaces.size(); ++j) {
            const auto& qi = subspaces[i];
            const auto& qj = subspaces[j];
            if (qi.empty() || qj.empty()) continue;
            Eigen::JacobiSVD<Matrix> svd(qi.vectors().transpose() * qj.vectors(),
                                         Eigen::ComputeFullU | Eigen::ComputeFullV);
            Matrix pi = qi.vectors() * svd.matrixU();
            Matrix pj = qj.vectors() * svd.matrixV();
            const Vector& sigma = svd.singularValues();
            for (Eigen::Index l = 0; l < sigma.size(); ++l)
                if (sigma(l) >= 1.0 - tol) pj.col(l) = pi.col(l);
            std::vector<OrthonormalBasis> cand = subspaces;
            cand[i] = OrthonormalBasis::from_columns(std::move(pi));
            cand[j] = OrthonormalBasis::from_columns(std::move(pj));
            best = std::max(best, meany_constant(cand, cap));
        }
    }
    return best;
}

MeanyEstimate meany_sup_estimate(const std::vector<Matrix>& generators, const MeanyOptions& options,
                                 const std::vector<std::uint64_t>& tags) {
    if (options.samples < 1) throw std::invalid_argument("meany_sup_estimate: need at least one sample");
    if (!tags.empty() && tags.size() != generators.size())
        throw std::invalid_argument("meany_sup_estimate: one tag per subspace");
    std::vector<OrthonormalBasis> spans;
    for (const auto& g : generators) {
        require_finite(g, "meany_sup_estimate generators");
        spans.push_back(orthonormal_basis(g));
    }
    MeanyEstimate est;
    est.samples.reserve(options.samples);
    std::vector<std::uint64_t> base(generators.size());
    for (std::size_t i = 0; i < generators.size(); ++i)
        base[i] = derive_seed(options.seed, tags.empty() ? i : tags[i]);
    std::vector<OrthonormalBasis> drawn(generators.size());
    for (std::size_t s = 0; s < options.samples; ++s) {
        for (std::size_t i = 0; i < generators.size(); ++i)
            drawn[i] = draw_basis(generators[i], spans[i], options.draw, derive_seed(base[i], s));
        est.samples.push_back(meany_constant(drawn, options.cap));
    }
    if (options.aligned_candidates) est.aligned = aligned_meany_candidate(spans, options.cap);
    summarize(est);
    return est;
}

MeanyEstimate meany_sup_estimate(const std::vector<OrthonormalBasis>& subspaces, const MeanyOptions& options) {
    std::vector<Matrix> generators;
    for (const auto& q : subspaces) {
        if (q.empty()) throw std::invalid_argument("meany_sup_estimate: empty subspace");
        generators.push_back(q.vectors());
    }
    return meany_sup_estimate(generators, options);
}

const char* to_string(GammaMethod method) {
    return method == GammaMethod::RandomSearch ? "random_search" : "exact_1d";
}

GammaReport gamma_for_partition(const LinearSystem& sys, const Partition& partition,
                                const MeanyOptions& options, const std::string& id) {
    if (partition.side != Side::Row) throw std::invalid_argument("gamma_for_partition: partition must be over rows");
    // Canonical block order: sorted indices, blocks ordered by first index.
    std::vector<std::vector<Eigen::Index>> blocks = partition.blocks;
    for (auto& b : blocks) std::sort(b.begin(), b.end());
    std::sort(blocks.begin(), blocks.end());
    const Partition checked = make_partition(sys, Side::Row, ExplicitBlocks{blocks});

    std::vector<Matrix> generators;
    std::vector<std::uint64_t> tags;
    std::vector<OrthonormalBasis> spans;
    bool exact = true;
    for (const auto& block : checked.blocks) {
        Matrix g(sys.cols(), static_cast<Eigen::Index>(block.size()));
        std::string key;
        for (std::size_t i = 0; i < block.size(); ++i) {
            g.col(Eigen::Index(i)) = sys.A().row(block[i]).transpose();
            key += std::to_string(block[i]) + ",";
        }
        OrthonormalBasis span = orthonormal_basis(g);
        if (span.empty()) continue;
        if (span.size() > 1) exact = false;
        spans.push_back(std::move(span));
        generators.push_back(std::move(g));
        tags.push_back(fnv1a(key));
    }

    GammaReport rep;
    rep.partition_id = id;
    rep.seed = options.seed;
    if (exact) {
        rep.method = GammaMethod::Exact1D;
        rep.sup_observed = meany_constant(spans, options.cap);
    } else {
        rep.method = GammaMethod::RandomSearch;
        rep.basis_samples = options.samples;
        rep.sup_observed = meany_sup_estimate(generators, options, tags).sup_observed;
    }
    rep.gamma = std::clamp(1.0 - rep.sup_observed, 0.0, 1.0);
    return rep;
}

bool verify_meany_bound(const Vector& y_before, const Vector& y_after,
                        const std::vector<OrthonormalBasis>& bases, double slack) {
    const double c = meany_constant(bases);
    return y_after.squaredNorm() <= (1.0 - c) * y_before.squaredNorm() + slack;
}

std::string meany_table_csv(const MeanyEstimate& est) {
    std::ostringstream out;
    out << "# rbas-meany v1\n";
    for (const double q : kMeanyQuantileLevels) out << 'q' << q << ',';
    out << "sup,mean,std,sample_max,aligned,samples\n";
    for (const double v : est.quantiles) out << format_double(v) << ',';
    out << format_double(est.sup_observed) << ',' << format_double(est.mean) << ','
        << format_double(est.stddev) << ',' << format_double(est.sample_max) << ','
        << format_double(est.aligned) << ',' << est.samples.size() << '\n';
    return out.str();
}

std::string gamma_table_csv(const std::vector<GammaReport>& reports) {
    std::ostringstream out;
    out << "# rbas-gamma v1\n";
    out << "partition,gamma,sup_observed,method,samples,seed\n";
    for (const auto& r : reports) {
        out << r.partition_id << ',' << format_double(r.gamma) << ',' << format_double(r.sup_observed) << ','
            << to_string(r.method) << ',' << r.basis_samples << ',' << r.seed << '\n';
    }
    return out.str();
}

}  // namespace rbas
