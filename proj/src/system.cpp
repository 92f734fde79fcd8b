#include "rbas/system.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rbas/text_io.hpp"

namespace rbas {

const char* to_string(Side side) { return side == Side::Row ? "row" : "col"; }

LinearSystem::LinearSystem(Matrix a, Vector b) {
    if (b.size() != a.rows()) {
        throw std::invalid_argument("LinearSystem: b has length " + std::to_string(b.size()) +
                                    " but A has " + std::to_string(a.rows()) + " rows");
    }
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("LinearSystem: empty matrix");
    require_finite(a, "LinearSystem A");
    require_finite(b, "LinearSystem b");

    auto impl = std::make_shared<Impl>();
    impl->frobenius_sq = a.squaredNorm();
    impl->row_norms_sq = a.rowwise().squaredNorm();
    impl->col_norms_sq = a.colwise().squaredNorm().transpose();

    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    impl->sigma_max = s.size() > 0 ? s(0) : 0.0;
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > kSvdRankTol * impl->sigma_max) ++r;
    impl->rank = r;
    impl->u = svd.matrixU().leftCols(r);
    impl->v = svd.matrixV().leftCols(r);
    impl->sigma = s.head(r);

    impl->x_ls = impl->v * (impl->u.transpose() * b).cwiseQuotient(impl->sigma);
    impl->r_star = a * impl->x_ls - b;
    impl->consistent = impl->r_star.norm() <= 1e-10 * std::max(1.0, b.norm());

    impl->a = std::move(a);
    impl->b = std::move(b);
    impl_ = std::move(impl);
}

Vector LinearSystem::apply_pinv(const Vector& r) const {
    if (r.size() != rows()) throw std::invalid_argument("apply_pinv: dimension mismatch");
    return impl_->v * (impl_->u.transpose() * r).cwiseQuotient(impl_->sigma);
}

Vector LinearSystem::residual(const Vector& x) const {
    if (x.size() != cols()) throw std::invalid_argument("residual: dimension mismatch");
    return impl_->a * x - impl_->b;
}

Vector solution_projection(const LinearSystem& sys, const Vector& x) {
    if (!sys.consistent()) throw std::domain_error("solution set empty");
    return x - sys.apply_pinv(sys.residual(x));
}

Vector residual_star(const LinearSystem& sys) { return sys.residual_star(); }

SolveTargets make_targets(const LinearSystem& sys, Side mode, const Vector& x0) {
    if (x0.size() != sys.cols()) throw std::invalid_argument("make_targets: x0 has wrong length");
    SolveTargets t;
    t.mode = mode;
    t.x0 = x0;
    if (mode == Side::Row) {
        t.projected_x0 = solution_projection(sys, x0);
    } else {
        t.r_star = sys.residual_star();
    }
    return t;
}

Partition make_partition(Eigen::Index extent, Side side, const PartitionScheme& scheme) {
    Partition p;
    p.side = side;
    if (const auto* eq = std::get_if<EqualBlocks>(&scheme)) {
        const auto k = static_cast<Eigen::Index>(eq->count);
        if (k < 1 || k > extent) {
            throw std::invalid_argument("make_partition: cannot split " + std::to_string(extent) +
                                        " indices into " + std::to_string(k) + " nonempty blocks");
        }
        const Eigen::Index base = extent / k, extra = extent % k;
        Eigen::Index next = 0;
        for (Eigen::Index i = 0; i < k; ++i) {
            std::vector<Eigen::Index> block(static_cast<std::size_t>(base + (i < extra ? 1 : 0)));
            for (auto& idx : block) idx = next++;
            p.blocks.push_back(std::move(block));
        }
        return p;
    }
    const auto& blocks = std::get<ExplicitBlocks>(scheme).blocks;
    if (blocks.empty()) throw std::invalid_argument("make_partition: no blocks");
    std::vector<int> seen(static_cast<std::size_t>(extent), 0);
    for (const auto& block : blocks) {
        if (block.empty()) throw std::invalid_argument("make_partition: empty block");
        for (const auto idx : block) {
            if (idx < 0 || idx >= extent) {
                throw std::invalid_argument("make_partition: index " + std::to_string(idx + 1) +
                                            " out of range");
            }
            if (seen[static_cast<std::size_t>(idx)]++) {
                throw std::invalid_argument("make_partition: index " + std::to_string(idx + 1) +
                                            " appears in more than one block");
            }
        }
    }
    const auto gap = std::find(seen.begin(), seen.end(), 0);
    if (gap != seen.end()) {
        throw std::invalid_argument("make_partition: index " +
                                    std::to_string(gap - seen.begin() + 1) + " not covered");
    }
    p.blocks = blocks;
    return p;
}

Partition make_partition(const LinearSystem& sys, Side side, const PartitionScheme& scheme) {
    return make_partition(side == Side::Row ? sys.rows() : sys.cols(), side, scheme);
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& msg) {
    throw ParseError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

double parse_number(const std::filesystem::path& path, std::size_t line, const std::string& tok) {
    const std::string t = trim(tok);
    if (t.empty()) parse_fail(path, line, "empty field");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE) parse_fail(path, line, "bad number '" + t + "'");
    return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open");
    return in;
}

Matrix read_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        std::vector<double> row;
        for (const auto& field : split(t, ',')) row.push_back(parse_number(path, lineno, field));
        if (!rows.empty() && row.size() != rows.front().size()) {
            parse_fail(path, lineno, "expected " + std::to_string(rows.front().size()) +
                                         " fields, found " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path.string() + ": no data");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

Matrix read_mtx(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
    ++lineno;
    std::istringstream header(line);
    std::string banner, object, layout, field, symmetry;
    header >> banner >> object >> layout >> field >> symmetry;
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        return s;
    };
    object = lower(object);
    layout = lower(layout);
    field = lower(field);
    symmetry = lower(symmetry);
    if (banner != "%%MatrixMarket" || object != "matrix") parse_fail(path, 1, "not a MatrixMarket matrix header");
    if (layout != "coordinate" && layout != "array") parse_fail(path, 1, "unsupported layout '" + layout + "'");
    if (field != "real" && field != "integer" && field != "double")
        parse_fail(path, 1, "unsupported field '" + field + "'");
    if (symmetry != "general" && symmetry != "symmetric")
        parse_fail(path, 1, "unsupported symmetry '" + symmetry + "'");
    const bool symmetric = symmetry == "symmetric";

    auto next_data_line = [&](std::string& out) {
        while (std::getline(in, out)) {
            ++lineno;
            const std::string t = trim(out);
            if (t.empty() || t.front() == '%') continue;
            out = t;
            return true;
        }
        return false;
    };

    if (!next_data_line(line)) parse_fail(path, lineno, "missing size line");
    std::istringstream size_line(line);
    long long rows = -1, cols = -1, nnz = -1;
    size_line >> rows >> cols;
    if (layout == "coordinate") size_line >> nnz;
    if (!size_line || rows <= 0 || cols <= 0 || (layout == "coordinate" && nnz < 0))
        parse_fail(path, lineno, "bad size line");

    Matrix m = Matrix::Zero(rows, cols);
    if (layout == "coordinate") {
        for (long long e = 0; e < nnz; ++e) {
            if (!next_data_line(line)) parse_fail(path, lineno, "expected " + std::to_string(nnz) + " entries");
            std::istringstream entry(line);
            long long i = 0, j = 0;
            std::string value;
            entry >> i >> j >> value;
            if (!entry && value.empty()) parse_fail(path, lineno, "bad entry");
            if (i < 1 || i > rows || j < 1 || j > cols) parse_fail(path, lineno, "entry index out of range");
            const double v = parse_number(path, lineno, value);
            m(i - 1, j - 1) = v;
            if (symmetric) m(j - 1, i - 1) = v;
        }
    } else {
        for (long long j = 0; j < cols; ++j) {
            for (long long i = symmetric ? j : 0; i < rows; ++i) {
                if (!next_data_line(line)) parse_fail(path, lineno, "too few array entries");
                const double v = parse_number(path, lineno, line);
                m(i, j) = v;
                if (symmetric) m(j, i) = v;
            }
        }
    }
    return m;
}

}  // namespace

FileFormat format_from_extension(const std::filesystem::path& path) {
    return path.extension() == ".mtx" ? FileFormat::MatrixMarket : FileFormat::Csv;
}

Matrix read_matrix(const std::filesystem::path& path, FileFormat format) {
    Matrix m = format == FileFormat::MatrixMarket ? read_mtx(path) : read_csv(path);
    if (!m.allFinite()) throw ParseError(path.string() + ": non-finite entry");
    return m;
}

Vector read_vector(const std::filesystem::path& path, FileFormat format) {
    const Matrix m = read_matrix(path, format);
    if (m.cols() != 1) throw ParseError(path.string() + ": expected a single column");
    return m.col(0);
}

void write_matrix(const std::filesystem::path& path, const Matrix& m, FileFormat format) {
    std::ostringstream out;
    if (format == FileFormat::MatrixMarket) {
        out << "%%MatrixMarket matrix array real general\n" << m.rows() << ' ' << m.cols() << '\n';
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) out << format_double(m(i, j)) << '\n';
    } else {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
            out << '\n';
        }
    }
    write_file_atomic(path, out.str());
}

void write_vector(const std::filesystem::path& path, const Vector& v, FileFormat format) {
    write_matrix(path, Matrix(v), format);
}

LinearSystem load_system(const std::filesystem::path& matrix_path,
                         const std::filesystem::path& rhs_path, FileFormat format) {
    Matrix a = read_matrix(matrix_path, format);
    Vector b = read_vector(rhs_path, format);
    if (b.size() != a.rows()) {
        throw std::invalid_argument("load_system: " + matrix_path.string() + " has " +
                                    std::to_string(a.rows()) + " rows but " + rhs_path.string() +
                                    " has " + std::to_string(b.size()) + " entries");
    }
    return LinearSystem(std::move(a), std::move(b));
}

}  // namespace rbas
