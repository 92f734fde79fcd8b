#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rbas/engine.hpp"
#include "rbas/meany.hpp"
#include "support.hpp"

using namespace rbas;

namespace {

Matrix unit_cols(Matrix m) {
    m.colwise().normalize();
    return m;
}

// Independent brute force: every r-subset, det of the Gram matrix via LU,
// independence judged by the SVD rank of the subset.
double brute_force_min(const Matrix& v) {
    const Eigen::Index m = v.cols();
    Eigen::JacobiSVD<Matrix> svd(v);
    const auto sv = svd.singularValues();
    Eigen::Index r = 0;
    while (r < sv.size() && sv(r) > 1e-10 * sv(0)) ++r;
    double best = 1e300;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        if (__builtin_popcount(mask) != r) continue;
        Matrix g(v.rows(), r);
        Eigen::Index c = 0;
        for (Eigen::Index j = 0; j < m; ++j)
            if (mask & (1u << j)) g.col(c++) = v.col(j);
        Eigen::JacobiSVD<Matrix> s(g);
        if (s.singularValues()(r - 1) <= 1e-10 * s.singularValues()(0)) continue;
        best = std::min(best, (g.transpose() * g).determinant());
    }
    return best;
}

OrthonormalBasis line_at(double theta) {
    Matrix v(2, 1);
    v << std::cos(theta), std::sin(theta);
    return OrthonormalBasis::from_columns(v);
}

}  // namespace

TEST_CASE("vector Meany constant of the 4x3 example") {
    const Matrix v = unit_cols(meany_example_matrix().transpose());
    const double c = maximal_independent_gram_min(v);
    CHECK(std::abs(c - 0.000955566) <= 1e-9);
    CHECK(c == doctest::Approx(brute_force_min(v)).epsilon(1e-9));
}

TEST_CASE("gram min: orthonormal sets, duplicates, caps and unit checks") {
    CHECK(maximal_independent_gram_min(Matrix::Identity(3, 3)) == doctest::Approx(1.0));
    Matrix dup(2, 3);
    const double s = std::sqrt(0.5);
    dup << 1, s, s, 0, s, s;
    Matrix without(2, 2);
    without << 1, s, 0, s;
    CHECK(maximal_independent_gram_min(dup) == doctest::Approx(maximal_independent_gram_min(without)));
    Matrix neg = dup;
    neg.col(2) *= -1.0;
    CHECK(maximal_independent_gram_min(neg) == doctest::Approx(0.5));
    CHECK_THROWS_AS(maximal_independent_gram_min(Matrix::Ones(2, 2)), std::invalid_argument);
    testing::Gen g(61);
    const Matrix many = unit_cols(g.gaussian(5, 21));
    CHECK_THROWS_AS(maximal_independent_gram_min(many), std::invalid_argument);
}

TEST_CASE("gram min agrees with brute force on random unit collections") {
    testing::Gen g(62);
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index d = g.size(1, 5), m = g.size(1, 8);
        const Eigen::Index rank = g.size(1, std::min(d, m));
        const Matrix v = unit_cols(g.low_rank(d, m, rank));
        const double c = maximal_independent_gram_min(v);
        CHECK(c >= 0.0);
        CHECK(c <= 1.0 + 1e-10);
        CHECK(c == doctest::Approx(brute_force_min(v)).epsilon(1e-7));
    }
}

TEST_CASE("meany_constant examples") {
    testing::Gen g(63);
    const auto q = orthonormal_basis(g.gaussian(4, 2));
    CHECK(meany_constant({q}) == doctest::Approx(1.0));
    CHECK(meany_constant({q, q}) == doctest::Approx(1.0));
    for (const double th : {0.1, 0.7, 1.2, M_PI / 2}) {
        const double sin2 = std::sin(th) * std::sin(th);
        CHECK(meany_constant({line_at(0.0), line_at(th)}) == doctest::Approx(sin2).epsilon(1e-10));
    }
}

TEST_CASE("meany_constant: bounds, permutation invariance and monotonicity") {
    testing::Gen g(64);
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index d = g.size(2, 5);
        std::vector<OrthonormalBasis> bases;
        const int count = int(g.size(1, 3));
        for (int i = 0; i < count; ++i) bases.push_back(orthonormal_basis(g.gaussian(d, g.size(1, 2))));
        const double c = meany_constant(bases);
        CHECK(c >= 0.0);
        CHECK(c <= 1.0 + 1e-10);
        std::vector<OrthonormalBasis> rev(bases.rbegin(), bases.rend());
        CHECK(std::abs(meany_constant(rev) - c) <= 1e-9);
        auto more = bases;
        more.push_back(orthonormal_basis(g.gaussian(d, 1)));
        CHECK(meany_constant(more) <= c + 1e-10);
    }
}

TEST_CASE("orthogonal subspaces give 1 for every sample") {
    MeanyOptions o;
    o.samples = 50;
    o.seed = 3;
    const auto est = meany_sup_estimate({orthonormal_basis(Matrix::Identity(4, 2)),
                                         orthonormal_basis(Matrix::Identity(4, 4).rightCols(2))},
                                        o);
    for (const double v : est.samples) CHECK(v == doctest::Approx(1.0));
    CHECK(est.sup_observed == doctest::Approx(1.0));
}

TEST_CASE("sample statistics, quantiles and the sup invariant") {
    const Matrix a = meany_example_matrix();
    const std::vector<Matrix> gens = {a.topRows(2).transpose(), a.bottomRows(2).transpose()};
    for (const auto draw : {BasisDraw::GeneratorMixing, BasisDraw::Haar}) {
        MeanyOptions o;
        o.samples = 500;
        o.seed = 5;
        o.draw = draw;
        const auto e = meany_sup_estimate(gens, o);
        REQUIRE(e.samples.size() == 500);
        for (const double v : e.samples) CHECK((v >= 0.0 && v <= 1.0 + 1e-10));
        CHECK(e.sample_max == *std::max_element(e.samples.begin(), e.samples.end()));
        CHECK(e.sup_observed >= e.sample_max);
        CHECK(e.sup_observed == std::max(e.sample_max, e.aligned));
        const double mean = std::accumulate(e.samples.begin(), e.samples.end(), 0.0) / 500.0;
        CHECK(e.mean == doctest::Approx(mean));
        for (std::size_t i = 1; i < e.quantiles.size(); ++i) CHECK(e.quantiles[i] >= e.quantiles[i - 1]);
        const auto again = meany_sup_estimate(gens, o);
        CHECK(again.samples == e.samples);
    }
    MeanyOptions one;
    one.samples = 1;
    const auto e1 = meany_sup_estimate(gens, one);
    for (const double q : e1.quantiles) CHECK(q == e1.samples[0]);
    CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(quantile({4, 1, 3, 2}, 0.25) == 1.75);
}

TEST_CASE("sample max is nondecreasing in the sample count") {
    const Matrix a = meany_example_matrix();
    const std::vector<Matrix> gens = {a.topRows(2).transpose(), a.bottomRows(2).transpose()};
    double prev = -1.0;
    for (const std::size_t n : {1u, 10u, 100u, 1000u}) {
        MeanyOptions o;
        o.samples = n;
        o.seed = 8;
        const auto e = meany_sup_estimate(gens, o);
        CHECK(e.sample_max >= prev);
        prev = e.sample_max;
        std::vector<double> head(e.samples.begin(), e.samples.begin() + 1);
        CHECK(head[0] == meany_sup_estimate(gens, MeanyOptions{1, 8}).samples[0]);
    }
}

TEST_CASE("aligned candidate: two planes sharing a line reach sin^2 of their angle") {
    for (const double th : {0.2, 0.9, 1.4}) {
        Matrix p1(3, 2), p2(3, 2);
        p1 << 1, 0, 0, 1, 0, 0;
        p2 << 1, 0, 0, std::cos(th), 0, std::sin(th);
        const double c = aligned_meany_candidate({orthonormal_basis(p1), orthonormal_basis(p2)});
        CHECK(c == doctest::Approx(std::sin(th) * std::sin(th)).epsilon(1e-9));
    }
}

TEST_CASE("gamma for the three partitions of the 4x3 example") {
    const auto sys = partition_example_problem();
    MeanyOptions o;
    o.samples = 200;
    o.seed = 1;
    const double expect[] = {0.880, 0.372, 0.372};
    const auto parts = partition_example_partitions();
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto p = make_partition(sys, Side::Row, parts[i].blocks);
        const auto rep = gamma_for_partition(sys, p, o, parts[i].name);
        CHECK(rep.gamma == doctest::Approx(expect[i]).epsilon(0.01 / expect[i]));
        CHECK(rep.partition_id == parts[i].name);
        CHECK(rep.gamma == doctest::Approx(1.0 - rep.sup_observed));
    }
}

TEST_CASE("gamma: single block, one-dimensional blocks and block reordering") {
    const auto sys = partition_example_problem();
    MeanyOptions o;
    o.samples = 100;
    const auto whole = gamma_for_partition(sys, make_partition(sys, Side::Row, EqualBlocks{1}), o);
    CHECK(whole.gamma <= 1e-10);

    const auto rows = gamma_for_partition(sys, make_partition(sys, Side::Row, EqualBlocks{4}), o);
    CHECK(rows.method == GammaMethod::Exact1D);
    const Matrix v = unit_cols(sys.A().transpose());
    CHECK(rows.gamma == doctest::Approx(1.0 - maximal_independent_gram_min(v)));

    testing::Gen g(65);
    for (int t = 0; t < 20; ++t) {
        const auto s = random_problem(6, 4, 4, true, std::uint64_t(t));
        const auto p = make_partition(s, Side::Row, ExplicitBlocks{{{0, 3}, {1, 5}, {2, 4}}});
        auto q = p;
        std::reverse(q.blocks.begin(), q.blocks.end());
        std::swap(q.blocks[0][0], q.blocks[0][1]);
        o.seed = std::uint64_t(t);
        CHECK(gamma_for_partition(s, p, o).gamma == gamma_for_partition(s, q, o).gamma);
    }
}

TEST_CASE("meany bound holds over certified windows") {
    testing::Gen g(66);
    int windows = 0;
    for (int t = 0; t < 200; ++t) {
        const auto sys = g.system(6, true);
        SamplerSpec s;
        s.name = "cyclic_vector_kaczmarz";
        auto smp = make_sampler(s, sys);
        StopCriteria stop;
        stop.max_iter = 3 * std::size_t(sys.rows());
        RunOptions ro;
        ro.keep_iterates = true;
        ro.keep_selectors = true;
        const auto h = run(sys, smp, g.vec(sys.cols()), stop, ro);
        for (const auto& rec : h.nu_records) {
            if (!rec.nu) continue;
            const std::size_t j = rec.j, m = *rec.nu;
            if (j + m + 1 >= h.iterates.size()) continue;
            std::vector<OrthonormalBasis> bases;
            for (std::size_t k = j; k <= j + m; ++k)
                if (h.records[k].chi) bases.push_back(realized_basis(sys, h.selectors[k]));
            CHECK(verify_meany_bound(h.iterates[j], h.iterates[j + m + 1], bases));
            ++windows;
        }
    }
    CHECK(windows > 200);
    // A first projection that annihilates y satisfies the bound with constant 1.
    CHECK(verify_meany_bound(Vector::Ones(2), Vector::Zero(2), {orthonormal_basis(Matrix::Ones(2, 1))}));
}

TEST_CASE("meany and gamma CSV schemas") {
    MeanyOptions o;
    o.samples = 3;
    const Matrix a = meany_example_matrix();
    const auto e = meany_sup_estimate({a.topRows(2).transpose(), a.bottomRows(2).transpose()}, o);
    const auto csv = meany_table_csv(e);
    CHECK(csv.rfind("# rbas-meany v1\nq0.001,q0.05,q0.25,q0.5,q0.75,q0.95,q0.999,sup,", 0) == 0);
    GammaReport r;
    r.partition_id = "I";
    r.gamma = 0.5;
    r.sup_observed = 0.5;
    CHECK(gamma_table_csv({r}).rfind("# rbas-gamma v1\npartition,gamma,sup_observed,method,samples,seed\nI,0.5,0.5,", 0) == 0);
}
