#include "rbas/problems.hpp"

#include <stdexcept>

namespace rbas {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

Vector gaussian_vector(Eigen::Index n, Rng& rng) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

LinearSystem identity_problem(Eigen::Index n) {
    if (n < 1) throw std::invalid_argument("identity_problem: n must be positive");
    return LinearSystem(Matrix::Identity(n, n), Vector::Ones(n));
}

Matrix meany_example_matrix() {
    Matrix a(4, 3);
    a << 2, 1, 0,
        -1, 2, 3,
         1, -3, 6,
         0, 1, -5;
    return a;
}

LinearSystem meany_example_problem() {
    Matrix a = meany_example_matrix();
    Vector b = a * Vector::Ones(3);
    return LinearSystem(std::move(a), std::move(b));
}

ExplicitBlocks meany_example_blocks() { return ExplicitBlocks{{{0, 1}, {2, 3}}}; }

Matrix partition_example_matrix() {
    Matrix a(4, 3);
    a << 1, -1, 1,
         1, -1, 1 + 1e-5,
         3, -1, 3,
         0, 1, 6;
    return a;
}

LinearSystem partition_example_problem() {
    Matrix a = partition_example_matrix();
    Vector b = a * Vector::Ones(3);
    return LinearSystem(std::move(a), std::move(b));
}

std::vector<NamedPartition> partition_example_partitions() {
    return {
        {"I", ExplicitBlocks{{{0, 1}, {2, 3}}}},
        {"II", ExplicitBlocks{{{0, 2}, {1, 3}}}},
        {"III", ExplicitBlocks{{{0, 3}, {1, 2}}}},
    };
}

LinearSystem anova_problem(int treatments, int replicates, std::uint64_t seed) {
    if (treatments < 1 || replicates < 1) {
        throw std::invalid_argument("anova_problem: treatments and replicates must be positive");
    }
    const Eigen::Index n = Eigen::Index(treatments) * replicates;
    Matrix a = Matrix::Zero(n, treatments + 1);
    a.col(0).setOnes();
    Rng rng(seed);
    const Vector effect = gaussian_vector(treatments, rng);
    Vector b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index t = i / replicates;
        a(i, t + 1) = 1.0;
        b(i) = effect(t) + rng.normal();
    }
    return LinearSystem(std::move(a), std::move(b));
}

LinearSystem random_problem(Eigen::Index n, Eigen::Index d, Eigen::Index rank, bool consistent,
                            std::uint64_t seed) {
    if (n < 1 || d < 1 || rank < 1 || rank > std::min(n, d)) {
        throw std::invalid_argument("random_problem: need 1 <= rank <= min(n, d)");
    }
    Rng rng(seed);
    Matrix a = rank == std::min(n, d) ? gaussian_matrix(n, d, rng)
                                      : Matrix(gaussian_matrix(n, rank, rng) * gaussian_matrix(rank, d, rng));
    Vector b = a * gaussian_vector(d, rng);
    if (!consistent) b += gaussian_vector(n, rng);
    return LinearSystem(std::move(a), std::move(b));
}

}  // namespace rbas
