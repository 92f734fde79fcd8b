#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rbas/linalg.hpp"

namespace rbas {

/// Row-action (Kaczmarz family) or column-action (coordinate-descent family).
enum class Side { Row, Col };

const char* to_string(Side side);

/// The pair (A, b) plus rank, consistency and a cached thin SVD of A.
///
/// Immutable after construction; copies share the cached factorization.
class LinearSystem {
public:
    /// Throws std::invalid_argument on shape mismatch or non-finite data.
    LinearSystem(Matrix a, Vector b);

    const Matrix& A() const { return impl_->a; }
    const Vector& b() const { return impl_->b; }
    Eigen::Index rows() const { return impl_->a.rows(); }
    Eigen::Index cols() const { return impl_->a.cols(); }
    Eigen::Index rank() const { return impl_->rank; }

    /// ||A x_ls - b|| <= 1e-10 * max(1, ||b||).
    bool consistent() const { return impl_->consistent; }

    double frobenius_sq() const { return impl_->frobenius_sq; }
    double spectral_norm() const { return impl_->sigma_max; }
    /// ||A^T e_j||^2 for each row j.
    const Vector& row_norms_sq() const { return impl_->row_norms_sq; }
    /// ||A e_j||^2 for each column j.
    const Vector& col_norms_sq() const { return impl_->col_norms_sq; }

    /// Minimum-norm least-squares solution A^+ b.
    const Vector& least_squares_solution() const { return impl_->x_ls; }
    /// r* = A x_ls - b = -P_{ker(A^T)} b.
    const Vector& residual_star() const { return impl_->r_star; }

    /// A^+ r using the cached SVD.
    Vector apply_pinv(const Vector& r) const;
    /// Ax - b.
    Vector residual(const Vector& x) const;

private:
    struct Impl {
        Matrix a;
        Vector b;
        Matrix u, v;  // thin, truncated at rank
        Vector sigma;
        Eigen::Index rank = 0;
        bool consistent = false;
        double frobenius_sq = 0.0;
        double sigma_max = 0.0;
        Vector row_norms_sq, col_norms_sq;
        Vector x_ls, r_star;
    };
    std::shared_ptr<const Impl> impl_;
};

/// Nearest point of H = {z : Az = b} to x, i.e. x - A^+(Ax - b).
/// Throws std::domain_error("solution set empty") for inconsistent systems.
Vector solution_projection(const LinearSystem& sys, const Vector& x);

/// r* = -P_{ker(A^T)} b.
Vector residual_star(const LinearSystem& sys);

/// Reference quantities used by diagnostics only; samplers never see them.
struct SolveTargets {
    Side mode = Side::Row;
    Vector x0;
    Vector projected_x0;  // P_H x0, row mode only
    Vector r_star;        // col mode only
};

/// Row mode requires a consistent system.
SolveTargets make_targets(const LinearSystem& sys, Side mode, const Vector& x0);

/// Disjoint, covering, ordered blocks of 0-based row or column indices.
struct Partition {
    Side side = Side::Row;
    std::vector<std::vector<Eigen::Index>> blocks;

    std::size_t size() const { return blocks.size(); }
};

/// `count` contiguous blocks whose sizes differ by at most one
/// (earlier blocks take the remainder).
struct EqualBlocks {
    std::size_t count = 1;
};
struct ExplicitBlocks {
    std::vector<std::vector<Eigen::Index>> blocks;
};
using PartitionScheme = std::variant<EqualBlocks, ExplicitBlocks>;

/// Validates coverage of [0, extent) exactly once with nonempty blocks.
Partition make_partition(Eigen::Index extent, Side side, const PartitionScheme& scheme);
Partition make_partition(const LinearSystem& sys, Side side, const PartitionScheme& scheme);

// ---------------------------------------------------------------------------
// File ingestion

enum class FileFormat { MatrixMarket, Csv };

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// .mtx -> MatrixMarket, anything else -> CSV.
FileFormat format_from_extension(const std::filesystem::path& path);

/// CSV: one matrix row per line, comma separated. MatrixMarket: `matrix`
/// objects in `coordinate` or `array` layout, real/integer, general/symmetric.
Matrix read_matrix(const std::filesystem::path& path, FileFormat format);
/// A single-column matrix (CSV: one value per line).
Vector read_vector(const std::filesystem::path& path, FileFormat format);

void write_matrix(const std::filesystem::path& path, const Matrix& m, FileFormat format);
void write_vector(const std::filesystem::path& path, const Vector& v, FileFormat format);

/// Reads A and b from separate files and builds the system.
LinearSystem load_system(const std::filesystem::path& matrix_path,
                         const std::filesystem::path& rhs_path, FileFormat format);

}  // namespace rbas
