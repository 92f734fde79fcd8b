#include "rbas/sketch.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rbas/system.hpp"
#include "rbas/text_io.hpp"

namespace rbas {

namespace {
constexpr const char* kEnsembleHeader = "# rbas-sketch v1";
}

const char* to_string(SketchDistribution dist) {
    return dist == SketchDistribution::Gaussian ? "gaussian" : "achlioptas";
}

SketchDistribution sketch_distribution_from_string(const std::string& name) {
    if (name == "gaussian") return SketchDistribution::Gaussian;
    if (name == "achlioptas") return SketchDistribution::Achlioptas;
    throw std::invalid_argument("unknown sketch distribution '" + name + "'");
}

double jl_embedding_threshold(double C, double w, double rho) {
    if (!(C > 0.0) || !(w > 0.0) || !(rho > 0.0)) {
        throw std::invalid_argument("jl_min_embedding_dim: C, w and rho must be positive");
    }
    return (rho + 1.0) * std::log(2.0) / (0.999 * C) * std::max(1.0 / 0.999, w);
}

std::size_t jl_min_embedding_dim(double C, double w, double rho) {
    const double t = jl_embedding_threshold(C, w, rho);
    return static_cast<std::size_t>(std::floor(t)) + 1;
}

double jl_failure_bound(double rho, double epsilon) {
    if (rho < 0.0 || epsilon < 0.0) throw std::invalid_argument("jl_failure_bound: negative argument");
    return std::exp2(-epsilon * rho);
}

JlParams achlioptas_params(double rho, std::size_t epsilon) {
    JlParams p;
    p.C = kAchlioptasC;
    p.w = kAchlioptasW;
    p.rho = rho;
    p.p = jl_min_embedding_dim(p.C, p.w, rho);
    p.epsilon = epsilon;
    return p;
}

SketchEnsemble draw_ensemble(Eigen::Index n, const JlParams& params, SketchDistribution dist,
                             std::uint64_t seed) {
    if (n < 1 || params.p < 1) throw std::invalid_argument("draw_ensemble: n and p must be positive");
    const auto p = static_cast<Eigen::Index>(params.p);
    SketchEnsemble out;
    out.distribution = dist;
    out.params = params;
    out.seed = seed;
    out.matrices.reserve(params.epsilon);
    const double gauss_scale = 1.0 / std::sqrt(double(p));
    const double sparse_value = std::sqrt(3.0 / double(p));
    for (std::size_t j = 0; j < params.epsilon; ++j) {
        Rng rng(derive_seed(seed, j));
        Matrix s(n, p);
        for (Eigen::Index c = 0; c < p; ++c) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (dist == SketchDistribution::Gaussian) {
                    s(i, c) = gauss_scale * rng.normal();
                } else {
                    const auto u = rng.below(6);
                    s(i, c) = u == 0 ? sparse_value : u == 1 ? -sparse_value : 0.0;
                }
            }
        }
        out.matrices.push_back(std::move(s));
    }
    return out;
}

void write_ensemble_csv(const std::filesystem::path& path, const SketchEnsemble& e) {
    std::ostringstream out;
    out << kEnsembleHeader << '\n'
        << "# distribution=" << to_string(e.distribution) << " seed=" << e.seed
        << " C=" << format_double(e.params.C) << " w=" << format_double(e.params.w)
        << " rho=" << format_double(e.params.rho) << " p=" << e.params.p
        << " epsilon=" << e.params.epsilon << " n=" << e.rows() << '\n'
        << "matrix,row,col,value\n";
    for (std::size_t j = 0; j < e.matrices.size(); ++j) {
        const Matrix& s = e.matrices[j];
        for (Eigen::Index c = 0; c < s.cols(); ++c)
            for (Eigen::Index i = 0; i < s.rows(); ++i)
                out << j << ',' << i << ',' << c << ',' << format_double(s(i, c)) << '\n';
    }
    write_file_atomic(path, out.str());
}

SketchEnsemble read_ensemble_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open");
    std::string line;
    if (!std::getline(in, line) || trim(line) != kEnsembleHeader)
        throw ParseError(path.string() + ":1: missing '" + kEnsembleHeader + "' header");
    if (!std::getline(in, line)) throw ParseError(path.string() + ":2: missing metadata line");

    SketchEnsemble e;
    long long n = -1;
    std::istringstream meta(trim(line).substr(1));
    std::string kv;
    while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "distribution") e.distribution = sketch_distribution_from_string(value);
        else if (key == "seed") e.seed = std::stoull(value);
        else if (key == "C") e.params.C = std::stod(value);
        else if (key == "w") e.params.w = std::stod(value);
        else if (key == "rho") e.params.rho = std::stod(value);
        else if (key == "p") e.params.p = std::stoull(value);
        else if (key == "epsilon") e.params.epsilon = std::stoull(value);
        else if (key == "n") n = std::stoll(value);
    }
    if (n < 1 || e.params.p < 1) throw ParseError(path.string() + ":2: bad metadata");
    e.matrices.assign(e.params.epsilon, Matrix::Zero(n, static_cast<Eigen::Index>(e.params.p)));

    std::size_t lineno = 2;
    std::getline(in, line);
    ++lineno;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 4) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
        try {
            const auto j = std::stoull(f[0]);
            const auto i = std::stoll(f[1]), c = std::stoll(f[2]);
            if (j >= e.matrices.size() || i < 0 || i >= n || c < 0 || c >= (long long)e.params.p)
                throw std::out_of_range("index");
            e.matrices[j](i, c) = std::stod(f[3]);
        } catch (const std::logic_error&) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad entry");
        }
    }
    return e;
}

}  // namespace rbas
