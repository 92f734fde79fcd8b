#pragma once

// Built-in test problems. Right-hand sides of the small fixed examples are
// b = A * ones, so x0 = 0 starts at squared distance d from the solution set
// when A has full column rank.

#include <cstdint>
#include <string>
#include <vector>

#include "rbas/system.hpp"

namespace rbas {

/// I_n with b = ones.
LinearSystem identity_problem(Eigen::Index n);

/// 4x3 matrix whose row pairs {1,2} and {3,4} define two planes in R^3.
Matrix meany_example_matrix();
LinearSystem meany_example_problem();
/// The two row blocks {1,2}, {3,4} (0-based).
ExplicitBlocks meany_example_blocks();

/// 4x3 matrix with two nearly parallel rows; used to compare row partitions.
Matrix partition_example_matrix();
LinearSystem partition_example_problem();

struct NamedPartition {
    std::string name;
    ExplicitBlocks blocks;
};
/// I = {1,2},{3,4}; II = {1,3},{2,4}; III = {1,4},{2,3}.
std::vector<NamedPartition> partition_example_partitions();

/// Balanced one-way design: an intercept column plus one indicator column per
/// treatment (rank = treatments). The response is a seeded treatment effect
/// plus unit noise, so the system is inconsistent.
LinearSystem anova_problem(int treatments, int replicates, std::uint64_t seed);

/// A = G1 * G2 with Gaussian factors of inner dimension `rank`. Consistent
/// systems use b = A * x for a Gaussian x; inconsistent ones add Gaussian noise.
LinearSystem random_problem(Eigen::Index n, Eigen::Index d, Eigen::Index rank, bool consistent,
                            std::uint64_t seed);

/// Matrix of i.i.d. standard normals drawn column by column.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);
Vector gaussian_vector(Eigen::Index n, Rng& rng);

}  // namespace rbas
