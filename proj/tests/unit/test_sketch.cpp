#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "rbas/sketch.hpp"
#include "rbas/system.hpp"

using namespace rbas;

namespace {

// Direct evaluation of the strict inequality p > (rho + 1) ln 2 / (0.999 C) * max(1/0.999, w).
bool satisfies(double p, double C, double w, double rho) {
    return p > (rho + 1.0) * std::log(2.0) / (0.999 * C) * std::max(1.0 / 0.999, w);
}

}  // namespace

TEST_CASE("embedding dimension for the Achlioptas preset") {
    CHECK(jl_min_embedding_dim(0.23467, 0.1127, 4.0) == 15);
    CHECK(achlioptas_params(4.0, 20).p == 15);
}

TEST_CASE("embedding dimension is the smallest integer satisfying the inequality") {
    const double cs[] = {0.05, 0.23467, 1.0, 10.0};
    const double ws[] = {0.01, 0.1127, 1.0, 3.0};
    const double rhos[] = {0.5, 1.0, 4.0, 9.0};
    for (const double C : cs)
        for (const double w : ws)
            for (const double rho : rhos) {
                const auto p = jl_min_embedding_dim(C, w, rho);
                CHECK(satisfies(double(p), C, w, rho));
                CHECK_FALSE(satisfies(double(p) - 1.0, C, w, rho));
                CHECK(jl_min_embedding_dim(C, w, 2.0 * rho + 1.0) >= p);
            }
    CHECK(jl_min_embedding_dim(10.0, 0.1, 1.0) == 1);
    CHECK_THROWS_AS(jl_min_embedding_dim(0.0, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("failure bound") {
    CHECK(jl_failure_bound(4.0, 20.0) == std::ldexp(1.0, -80));
    CHECK(jl_failure_bound(4.0, 0.0) == 1.0);
    CHECK(jl_failure_bound(1.5, 6.0) == doctest::Approx(jl_failure_bound(1.5, 3.0) * jl_failure_bound(1.5, 3.0)));
}

TEST_CASE("Achlioptas entries take three values with 1/6, 2/3, 1/6 frequencies") {
    JlParams params = achlioptas_params(4.0, 5);
    const auto e = draw_ensemble(400, params, SketchDistribution::Achlioptas, 3);
    REQUIRE(e.size() == 5);
    const double s = std::sqrt(3.0 / double(params.p));
    double plus = 0, zero = 0, total = 0;
    for (const auto& m : e.matrices) {
        CHECK(m.rows() == 400);
        CHECK(m.cols() == Eigen::Index(params.p));
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double v = m.data()[i];
            REQUIRE((v == 0.0 || v == s || v == -s));
            plus += v > 0;
            zero += v == 0;
            ++total;
        }
    }
    CHECK(std::abs(plus / total - 1.0 / 6.0) < 0.01);
    CHECK(std::abs(zero / total - 2.0 / 3.0) < 0.01);
}

TEST_CASE("sketches are isometric in expectation and replay under a seed") {
    for (const auto dist : {SketchDistribution::Gaussian, SketchDistribution::Achlioptas}) {
        JlParams params;
        params.p = 15;
        params.epsilon = 1000;
        const auto e = draw_ensemble(30, params, dist, 4);
        Vector r = Vector::LinSpaced(30, -1.0, 2.0);
        r.normalize();
        double mean = 0.0, min_norm = 1.0;
        for (const auto& m : e.matrices) {
            const double v = (m.transpose() * r).squaredNorm();
            mean += v;
            min_norm = std::min(min_norm, v);
        }
        mean /= double(e.size());
        CHECK(mean > 0.9);
        CHECK(mean < 1.1);
        if (dist == SketchDistribution::Gaussian) CHECK(min_norm > 1e-12);
        const auto again = draw_ensemble(30, params, dist, 4);
        CHECK(again.matrices[17] == e.matrices[17]);
    }
}

TEST_CASE("Gaussian sketches with p = 15 never annihilate a fixed vector") {
    JlParams params;
    params.p = 15;
    params.epsilon = 10000;
    const auto e = draw_ensemble(8, params, SketchDistribution::Gaussian, 5);
    const Vector r = Vector::Ones(8).normalized();
    for (const auto& m : e.matrices) REQUIRE((m.transpose() * r).squaredNorm() > 1e-12);
}

TEST_CASE("ensemble CSV round trip") {
    JlParams params = achlioptas_params(2.0, 3);
    const auto e = draw_ensemble(6, params, SketchDistribution::Achlioptas, 9);
    const auto path = std::filesystem::temp_directory_path() / "rbas_sketch_test" / "ens.csv";
    write_ensemble_csv(path, e);
    const auto back = read_ensemble_csv(path);
    REQUIRE(back.size() == e.size());
    for (std::size_t j = 0; j < e.size(); ++j) CHECK(back.matrices[j] == e.matrices[j]);
    CHECK(back.distribution == e.distribution);
    CHECK(back.params.p == e.params.p);
    CHECK(back.seed == e.seed);
    CHECK(sketch_distribution_from_string(to_string(SketchDistribution::Gaussian)) == SketchDistribution::Gaussian);
    CHECK_THROWS_AS(sketch_distribution_from_string("fjlt"), std::invalid_argument);
}
