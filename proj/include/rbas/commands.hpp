#pragma once

// Experiment commands behind the rbas CLI. Each command reads a Config,
// writes versioned CSV files into the output directory and returns what it
// wrote for programmatic use.
//
// Config grammar (every section optional unless a command needs it):
//
//   seed = U64
//   [system]   generator = identity|meany_example|partition_example|anova|random
//              n, d, rank, consistent, treatments, replicates, seed
//              matrix = PATH, rhs = PATH, format = csv|mtx   (instead of generator)
//   [sampler]  name, partition = "1,2; 3,4" | I | II | III, blocks = K, p,
//              sample_size, block_width, sketch_distribution, sketch_p,
//              sketch_count, sketch_rho, seed, metric = PATH (SPD matrix B)
//   [x0]       kind = zero|random|explicit, values = v1,v2,..., seed
//   [stop]     max_iter, error_tol, max_seconds
//   [diagnostics] nu_horizon, revalidate_every
//   [output]   history, summary, tau, nu, x_final   (file names inside --out)
//   [meany]    blocks = "1,2; 3,4", samples, draw = generator_mixing|haar, aligned, output
//   [gamma]    partition.NAME = "1,2; 3,4" (repeatable), samples, draw, aligned, output
//   [locality] n, d, chunk, load_cost, error_tol, output
//   [jl]       C, w, rho, epsilon, distribution, n, dump, output
//
// Row and column indices in the config are 1-based.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rbas/config.hpp"
#include "rbas/engine.hpp"
#include "rbas/meany.hpp"
#include "rbas/sketch.hpp"

namespace rbas {

struct CommandOptions {
    std::optional<std::uint64_t> seed;   // --seed
    std::filesystem::path out = ".";     // --out
    std::optional<std::size_t> samples;  // --samples
    std::ostream* log = nullptr;         // seed notices; defaults to std::cerr
    // jl-dim overrides
    std::optional<double> C, w, rho;
    std::optional<std::size_t> epsilon;
};

/// --seed, else the config's top-level seed, else fnv1a of the config text
/// (announced on the log stream).
std::uint64_t resolve_seed(const Config& config, const CommandOptions& options);

/// Builds the [system] section. Throws ConfigError on bad or missing keys.
LinearSystem system_from_config(const Config& config, std::uint64_t seed);
SamplerSpec sampler_spec_from_config(const Config& config, const LinearSystem& sys, std::uint64_t seed);
Vector x0_from_config(const Config& config, Eigen::Index d, std::uint64_t seed);

struct SolveResult {
    std::uint64_t seed = 0;
    std::string method;
    SolveHistory history;
    Vector x_final;  // in the original variables when a metric is set
    std::vector<std::filesystem::path> files;
};
SolveResult cmd_solve(const Config& config, const CommandOptions& options);

struct MeanyTableResult {
    std::uint64_t seed = 0;
    MeanyEstimate estimate;
    std::filesystem::path file;
};
MeanyTableResult cmd_meany_table(const Config& config, const CommandOptions& options);

struct GammaTableResult {
    std::uint64_t seed = 0;
    std::vector<GammaReport> reports;
    std::filesystem::path file;
};
GammaTableResult cmd_gamma_table(const Config& config, const CommandOptions& options);

/// Counts chunk fetches for a row-chunked matrix kept out of core: a load is
/// charged whenever a touched row lives outside the resident chunk.
class ChunkCostModel {
public:
    ChunkCostModel(Eigen::Index chunk_size, double load_cost);
    void touch(Eigen::Index row);
    std::size_t loads() const { return loads_; }
    double cost() const { return static_cast<double>(loads_) * load_cost_; }
    std::optional<Eigen::Index> resident_chunk() const { return resident_; }
    Eigen::Index chunk_size() const { return chunk_size_; }

private:
    Eigen::Index chunk_size_;
    double load_cost_;
    std::optional<Eigen::Index> resident_;
    std::size_t loads_ = 0;
};

struct LocalityRun {
    std::string solver;
    std::size_t iterations = 0;
    std::size_t chunk_loads = 0;
    double load_cost = 0.0;
    std::uint64_t arith_ops = 0;
    double final_error_sq = 0.0;
};

struct LocalityResult {
    std::uint64_t seed = 0;
    Eigen::Index n = 0, d = 0, chunk = 0;
    std::size_t chunks = 0;
    LocalityRun oracle, block;
    std::filesystem::path file;
};

struct LocalityParams {
    Eigen::Index n = 100000;
    Eigen::Index d = 50;
    Eigen::Index chunk = 10000;
    double load_cost = 1.0;
    double error_tol = 1e-16;
};

/// A Gaussian n x d system in which d rows are replaced by the identity rows
/// e_1..e_d at random positions. The oracle solver applies Kaczmarz to exactly
/// those rows (2 ops each); the block solver runs randomized block Kaczmarz
/// over the chunks until error_sq <= error_tol. Block steps are charged
/// 2md (block residual) + 2md^2 (QR) + 2md + d (solve and update) ops for an
/// m-row chunk.
LocalityResult run_locality(const LocalityParams& params, std::uint64_t seed);
LocalityResult cmd_locality(const Config& config, const CommandOptions& options);

struct JlResult {
    JlParams params;
    double threshold = 0.0;
    double failure_bound = 0.0;
    SketchDistribution distribution = SketchDistribution::Achlioptas;
    std::vector<std::filesystem::path> files;
};
JlResult cmd_jl_dim(const Config& config, const CommandOptions& options);

}  // namespace rbas
