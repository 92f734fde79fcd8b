#include "rbas/commands.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <sstream>

#include "rbas/problems.hpp"
#include "rbas/text_io.hpp"

namespace rbas {

namespace {

std::ostream& log_of(const CommandOptions& o) { return o.log ? *o.log : std::cerr; }

const std::vector<std::string> kSections = {"",      "system", "sampler", "x0",    "stop", "diagnostics",
                                            "output", "meany",  "gamma",   "locality", "jl"};

void check_known(const Config& c) {
    c.require_known("*", kSections);
    c.require_known("", {"seed"});
    c.require_known("system", {"generator", "n", "d", "rank", "consistent", "treatments", "replicates", "seed",
                               "matrix", "rhs", "format"});
    c.require_known("sampler", {"name", "partition", "blocks", "p", "sample_size", "block_width",
                                "sketch_distribution", "sketch_p", "sketch_count", "sketch_rho", "seed", "metric"});
    c.require_known("x0", {"kind", "values", "seed"});
    c.require_known("stop", {"max_iter", "error_tol", "max_seconds"});
    c.require_known("diagnostics", {"nu_horizon", "revalidate_every"});
    c.require_known("output", {"history", "summary", "tau", "nu", "x_final"});
    c.require_known("meany", {"blocks", "samples", "draw", "aligned", "output"});
    c.require_known("gamma", {"partition.*", "samples", "draw", "aligned", "output"});
    c.require_known("locality", {"n", "d", "chunk", "load_cost", "error_tol", "output"});
    c.require_known("jl", {"C", "w", "rho", "epsilon", "distribution", "n", "dump", "output"});
}

std::int64_t positive_int(const Config& c, const std::string& sec, const std::string& key, std::int64_t fallback) {
    const auto v = c.get_int(sec, key);
    if (!v) return fallback;
    if (*v < 1) c.fail(sec, key, "must be positive");
    return *v;
}

std::filesystem::path output_path(const Config& c, const CommandOptions& o, const std::string& sec,
                                  const std::string& key, const std::string& fallback) {
    return o.out / c.get_string(sec, key, fallback);
}

FileFormat format_for(const Config& c, const std::filesystem::path& matrix) {
    const auto f = c.get_string("system", "format");
    if (!f) return format_from_extension(matrix);
    if (*f == "csv") return FileFormat::Csv;
    if (*f == "mtx" || *f == "matrix_market") return FileFormat::MatrixMarket;
    c.fail("system", "format", "expected csv or mtx, got '" + *f + "'");
}

ExplicitBlocks blocks_from(const Config& c, const std::string& sec, const std::string& key) {
    ExplicitBlocks out;
    const auto blocks = c.get_blocks(sec, key);
    for (const auto& block : *blocks)
        out.blocks.emplace_back(block.begin(), block.end());
    return out;
}

// Named partitions of the built-in 4x3 partition example.
std::optional<ExplicitBlocks> named_partition(const std::string& name) {
    for (const auto& np : partition_example_partitions())
        if (np.name == name) return np.blocks;
    return std::nullopt;
}

BasisDraw draw_from(const Config& c, const std::string& sec) {
    const std::string v = c.get_string(sec, "draw", "generator_mixing");
    if (v == "generator_mixing") return BasisDraw::GeneratorMixing;
    if (v == "haar") return BasisDraw::Haar;
    c.fail(sec, "draw", "expected generator_mixing or haar, got '" + v + "'");
}

MeanyOptions meany_options(const Config& c, const CommandOptions& o, const std::string& sec, std::uint64_t seed) {
    MeanyOptions m;
    m.samples = o.samples ? *o.samples : static_cast<std::size_t>(positive_int(c, sec, "samples", 10000));
    if (m.samples < 1) throw ConfigError("--samples must be positive");
    m.seed = seed;
    m.draw = draw_from(c, sec);
    m.aligned_candidates = c.get_bool(sec, "aligned").value_or(true);
    return m;
}

std::string summary_csv(const SolveResult& r) {
    const auto& h = r.history;
    std::size_t certified = 0;
    for (const auto& p : h.tau_points) certified += p.closed ? 1 : 0;
    double drift = 0.0;
    for (const double v : h.residual_drift) drift = std::max(drift, v);
    std::ostringstream out;
    out << "# rbas-summary v1\n";
    out << "method,mode,seed,iterations,reason,initial_error_sq,final_error_sq,certified_windows,max_residual_drift\n";
    out << r.method << ',' << to_string(h.mode) << ',' << r.seed << ',' << h.iterations() << ','
        << to_string(h.reason) << ',' << format_double(h.records.front().error_sq) << ','
        << format_double(h.final_error_sq()) << ',' << certified << ',' << format_double(drift) << '\n';
    return out.str();
}

std::string tau_csv(const SolveHistory& h) {
    std::ostringstream out;
    out << "# rbas-tau v1\nj,tau,ratio,closed\n";
    for (const auto& p : h.tau_points)
        out << p.j << ',' << p.tau << ',' << (p.closed ? format_double(p.ratio) : "") << ',' << (p.closed ? 1 : 0)
            << '\n';
    return out.str();
}

std::string nu_csv(const SolveHistory& h) {
    std::ostringstream out;
    out << "# rbas-nu v1\nj,nu\n";
    for (const auto& r : h.nu_records)
        out << r.j << ',' << (r.nu ? std::to_string(*r.nu) : "undetected") << '\n';
    return out.str();
}

}  // namespace

std::uint64_t resolve_seed(const Config& config, const CommandOptions& options) {
    if (options.seed) return *options.seed;
    if (const auto s = config.get_u64("", "seed")) return *s;
    const std::uint64_t seed = fnv1a(config.text());
    log_of(options) << "rbas: seed=" << seed << " (derived from config hash; pass --seed " << seed
                    << " to replay)\n";
    return seed;
}

LinearSystem system_from_config(const Config& c, std::uint64_t seed) {
    const auto matrix = c.get_string("system", "matrix");
    const auto gen = c.get_string("system", "generator");
    if (matrix && gen) c.fail("system", "matrix", "give either a generator or matrix/rhs files, not both");
    if (matrix) {
        const auto rhs = c.get_string("system", "rhs");
        if (!rhs) c.fail("system", "rhs", "required together with matrix");
        return load_system(*matrix, *rhs, format_for(c, *matrix));
    }
    if (!gen) throw ConfigError(c.origin() + ": [system] needs a generator or matrix/rhs files");
    const std::uint64_t sys_seed = c.get_u64("system", "seed").value_or(derive_seed(seed, 10));
    if (*gen == "identity") return identity_problem(positive_int(c, "system", "n", 2));
    if (*gen == "meany_example") return meany_example_problem();
    if (*gen == "partition_example") return partition_example_problem();
    if (*gen == "anova") {
        const auto t = positive_int(c, "system", "treatments", 4);
        const auto r = positive_int(c, "system", "replicates", 5);
        return anova_problem(static_cast<int>(t), static_cast<int>(r), sys_seed);
    }
    if (*gen == "random") {
        const auto n = positive_int(c, "system", "n", 6);
        const auto d = positive_int(c, "system", "d", 4);
        const auto rank = positive_int(c, "system", "rank", std::min(n, d));
        if (rank > std::min(n, d)) c.fail("system", "rank", "exceeds min(n, d)");
        return random_problem(n, d, rank, c.get_bool("system", "consistent").value_or(true), sys_seed);
    }
    c.fail("system", "generator", "unknown generator '" + *gen + "'");
}

SamplerSpec sampler_spec_from_config(const Config& c, const LinearSystem& sys, std::uint64_t seed) {
    SamplerSpec s;
    const auto name = c.get_string("sampler", "name");
    if (!name) throw ConfigError(c.origin() + ": [sampler] name is required");
    const MethodInfo* info = nullptr;
    try {
        info = &method_info(*name);
    } catch (const std::invalid_argument&) {
        c.fail("sampler", "name", "unknown sampler '" + *name + "'");
    }
    s.name = *name;
    s.seed = c.get_u64("sampler", "seed").value_or(derive_seed(seed, 0));

    if (c.has("sampler", "partition") && c.has("sampler", "blocks"))
        c.fail("sampler", "blocks", "give either partition or blocks, not both");
    if (const auto p = c.get_string("sampler", "partition")) {
        if (const auto named = named_partition(*p)) s.partition = *named;
        else s.partition = blocks_from(c, "sampler", "partition");
        try {
            make_partition(sys, info->side, *s.partition);
        } catch (const std::invalid_argument& e) {
            c.fail("sampler", "partition", e.what());
        }
    } else if (c.has("sampler", "blocks")) {
        const auto k = positive_int(c, "sampler", "blocks", 1);
        const Eigen::Index extent = info->side == Side::Row ? sys.rows() : sys.cols();
        if (k > extent) c.fail("sampler", "blocks", "more blocks than " + std::string(info->side == Side::Row ? "rows" : "columns"));
        s.partition = EqualBlocks{static_cast<std::size_t>(k)};
    }
    if (const auto p = c.get_double("sampler", "p")) s.p_exponent = *p;
    if (c.has("sampler", "sample_size")) s.sample_size = positive_int(c, "sampler", "sample_size", 1);
    if (c.has("sampler", "block_width")) s.block_width = positive_int(c, "sampler", "block_width", 1);

    if (info->method == Method::AdaptiveSketchProject) {
        SketchSpec sk;
        const std::string dist = c.get_string("sampler", "sketch_distribution", "achlioptas");
        try {
            sk.distribution = sketch_distribution_from_string(dist);
        } catch (const std::invalid_argument&) {
            c.fail("sampler", "sketch_distribution", "unknown distribution '" + dist + "'");
        }
        const double rho = c.get_double("sampler", "sketch_rho").value_or(4.0);
        const auto count = static_cast<std::size_t>(positive_int(c, "sampler", "sketch_count", 20));
        if (sk.distribution == SketchDistribution::Achlioptas) {
            sk.params = achlioptas_params(rho, count);
        } else {
            sk.params.rho = rho;
            sk.params.epsilon = count;
            if (!c.has("sampler", "sketch_p")) c.fail("sampler", "sketch_p", "required for gaussian sketches");
        }
        if (c.has("sampler", "sketch_p")) sk.params.p = static_cast<std::size_t>(positive_int(c, "sampler", "sketch_p", 1));
        s.sketch = sk;
    }
    return s;
}

Vector x0_from_config(const Config& c, Eigen::Index d, std::uint64_t seed) {
    const std::string kind = c.get_string("x0", "kind", "zero");
    if (kind == "zero") return Vector::Zero(d);
    if (kind == "random") {
        Rng rng(c.get_u64("x0", "seed").value_or(derive_seed(seed, 11)));
        return gaussian_vector(d, rng);
    }
    if (kind == "explicit") {
        const auto v = c.get_doubles("x0", "values");
        if (!v) c.fail("x0", "values", "required for kind = explicit");
        if (static_cast<Eigen::Index>(v->size()) != d)
            c.fail("x0", "values", "expected " + std::to_string(d) + " values, got " + std::to_string(v->size()));
        return Eigen::Map<const Vector>(v->data(), d);
    }
    c.fail("x0", "kind", "expected zero, random or explicit, got '" + kind + "'");
}

SolveResult cmd_solve(const Config& c, const CommandOptions& o) {
    check_known(c);
    SolveResult res;
    res.seed = resolve_seed(c, o);
    const LinearSystem original = system_from_config(c, res.seed);
    const Vector x0 = x0_from_config(c, original.cols(), res.seed);

    std::optional<MetricTransform> metric;
    if (const auto path = c.get_string("sampler", "metric")) {
        const Matrix b = read_matrix(*path, format_from_extension(*path));
        try {
            metric.emplace(b);
        } catch (const std::invalid_argument& e) {
            c.fail("sampler", "metric", e.what());
        }
        if (b.rows() != original.cols()) c.fail("sampler", "metric", "metric size does not match the unknowns");
    }
    const LinearSystem sys = metric ? metric->transform(original) : original;
    const SamplerSpec spec = sampler_spec_from_config(c, sys, res.seed);
    Sampler sampler = make_sampler(spec, sys);
    res.method = spec.name;

    StopCriteria stop;
    stop.max_iter = static_cast<std::size_t>(c.get_int("stop", "max_iter").value_or(1000));
    if (c.get_int("stop", "max_iter").value_or(0) < 0) c.fail("stop", "max_iter", "must be non-negative");
    stop.error_tol = c.get_double("stop", "error_tol").value_or(0.0);
    stop.max_seconds = c.get_double("stop", "max_seconds").value_or(0.0);
    RunOptions ro;
    if (c.has("diagnostics", "nu_horizon")) ro.nu_horizon = positive_int(c, "diagnostics", "nu_horizon", 1);
    if (c.has("diagnostics", "revalidate_every"))
        ro.revalidate_every = positive_int(c, "diagnostics", "revalidate_every", 1);

    res.history = run(sys, sampler, metric ? metric->to_solver(x0) : x0, stop, ro);
    res.x_final = metric ? metric->to_original(res.history.x_final) : res.history.x_final;

    const auto history = output_path(c, o, "output", "history", "history.csv");
    const auto summary = output_path(c, o, "output", "summary", "summary.csv");
    const auto tau = output_path(c, o, "output", "tau", "tau.csv");
    const auto nu = output_path(c, o, "output", "nu", "nu.csv");
    const auto xf = output_path(c, o, "output", "x_final", "x_final.csv");
    write_history_csv(history, res.history);
    write_file_atomic(summary, summary_csv(res));
    write_file_atomic(tau, tau_csv(res.history));
    write_file_atomic(nu, nu_csv(res.history));
    write_vector(xf, res.x_final, FileFormat::Csv);
    res.files = {history, summary, tau, nu, xf};
    return res;
}

MeanyTableResult cmd_meany_table(const Config& c, const CommandOptions& o) {
    check_known(c);
    MeanyTableResult res;
    res.seed = resolve_seed(c, o);
    const bool custom = c.has_section("system");
    const LinearSystem sys = custom ? system_from_config(c, res.seed) : meany_example_problem();
    ExplicitBlocks blocks;
    if (c.has("meany", "blocks")) blocks = blocks_from(c, "meany", "blocks");
    else if (!custom) blocks = meany_example_blocks();
    else c.fail("meany", "blocks", "required when [system] is given");

    std::vector<Matrix> generators;
    for (const auto& block : blocks.blocks) {
        Matrix g(sys.cols(), static_cast<Eigen::Index>(block.size()));
        for (std::size_t i = 0; i < block.size(); ++i) {
            if (block[i] >= sys.rows()) c.fail("meany", "blocks", "row " + std::to_string(block[i] + 1) + " out of range");
            g.col(Eigen::Index(i)) = sys.A().row(block[i]).transpose();
        }
        generators.push_back(std::move(g));
    }
    res.estimate = meany_sup_estimate(generators, meany_options(c, o, "meany", res.seed));
    res.file = output_path(c, o, "meany", "output", "meany.csv");
    write_file_atomic(res.file, meany_table_csv(res.estimate));
    return res;
}

GammaTableResult cmd_gamma_table(const Config& c, const CommandOptions& o) {
    check_known(c);
    GammaTableResult res;
    res.seed = resolve_seed(c, o);
    const bool custom = c.has_section("system");
    const LinearSystem sys = custom ? system_from_config(c, res.seed) : partition_example_problem();

    std::vector<NamedPartition> parts;
    for (const auto& key : c.keys("gamma")) {
        if (key.rfind("partition.", 0) != 0) continue;
        const std::string name = key.substr(10);
        if (name.empty()) c.fail("gamma", key, "partition name is empty");
        parts.push_back(NamedPartition{name, blocks_from(c, "gamma", key)});
    }
    if (parts.empty()) {
        if (custom) throw ConfigError(c.origin() + ": [gamma] needs partition.NAME entries when [system] is given");
        parts = partition_example_partitions();
    }
    const MeanyOptions mo = meany_options(c, o, "gamma", res.seed);
    for (const auto& np : parts) {
        Partition p;
        try {
            p = make_partition(sys, Side::Row, np.blocks);
        } catch (const std::invalid_argument& e) {
            c.fail("gamma", "partition." + np.name, e.what());
        }
        res.reports.push_back(gamma_for_partition(sys, p, mo, np.name));
    }
    res.file = output_path(c, o, "gamma", "output", "gamma.csv");
    write_file_atomic(res.file, gamma_table_csv(res.reports));
    return res;
}

// ---------------------------------------------------------------------------

ChunkCostModel::ChunkCostModel(Eigen::Index chunk_size, double load_cost)
    : chunk_size_(chunk_size), load_cost_(load_cost) {
    if (chunk_size < 1) throw std::invalid_argument("ChunkCostModel: chunk_size must be positive");
}

void ChunkCostModel::touch(Eigen::Index row) {
    const Eigen::Index chunk = row / chunk_size_;
    if (resident_ && *resident_ == chunk) return;
    resident_ = chunk;
    ++loads_;
}

LocalityResult run_locality(const LocalityParams& prm, std::uint64_t seed) {
    if (prm.n < 1 || prm.d < 1 || prm.chunk < 1) throw std::invalid_argument("locality: n, d and chunk must be positive");
    if (prm.d > prm.n) throw std::invalid_argument("locality: d exceeds n");
    LocalityResult res;
    res.seed = seed;
    res.n = prm.n;
    res.d = prm.d;
    res.chunk = std::min(prm.chunk, prm.n);
    res.chunks = static_cast<std::size_t>((prm.n + res.chunk - 1) / res.chunk);

    Rng rng(derive_seed(seed, 20));
    Matrix a = gaussian_matrix(prm.n, prm.d, rng);
    const Vector x_star = gaussian_vector(prm.d, rng);
    // d distinct positions by a partial Fisher-Yates shuffle.
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(prm.n));
    std::iota(rows.begin(), rows.end(), Eigen::Index(0));
    std::vector<Eigen::Index> pos(static_cast<std::size_t>(prm.d));
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(rows.size() - i));
        std::swap(rows[i], rows[j]);
        pos[i] = rows[i];
        a.row(pos[i]).setZero();
        a(pos[i], Eigen::Index(i)) = 1.0;
    }
    const Vector b = a * x_star;

    // Oracle: Kaczmarz on the identity rows, e_i^T x = b_p, one read and one write each.
    {
        ChunkCostModel cost(res.chunk, prm.load_cost);
        Vector x = Vector::Zero(prm.d);
        std::uint64_t ops = 0;
        for (std::size_t i = 0; i < pos.size(); ++i) {
            cost.touch(pos[i]);
            const double r = x(Eigen::Index(i)) - b(pos[i]);
            x(Eigen::Index(i)) -= r;
            ops += 2;
        }
        res.oracle = LocalityRun{"oracle", pos.size(), cost.loads(), cost.cost(), ops, (x - x_star).squaredNorm()};
    }

    // Randomized block Kaczmarz with one block per chunk.
    {
        const LinearSystem sys(std::move(a), b);
        ExplicitBlocks blocks;
        for (Eigen::Index start = 0; start < prm.n; start += res.chunk) {
            std::vector<Eigen::Index> block(static_cast<std::size_t>(std::min(res.chunk, prm.n - start)));
            std::iota(block.begin(), block.end(), start);
            blocks.blocks.push_back(std::move(block));
        }
        SamplerSpec spec;
        spec.name = "random_permutation_block_kaczmarz";
        spec.partition = blocks;
        spec.seed = derive_seed(seed, 21);
        Sampler sampler = make_sampler(spec, sys);
        StopCriteria stop;
        stop.error_tol = prm.error_tol;
        stop.max_iter = 100 * res.chunks;
        RunOptions ro;
        ro.keep_selectors = true;
        ro.revalidate_every = 0;
        const SolveHistory h = run(sys, sampler, Vector::Zero(prm.d), stop, ro);

        ChunkCostModel cost(res.chunk, prm.load_cost);
        std::uint64_t ops = 0;
        const auto d = static_cast<std::uint64_t>(prm.d);
        for (const auto& sel : h.selectors) {
            const auto& idx = std::get<RowIndices>(sel).idx;
            for (const auto row : idx) cost.touch(row);
            const auto m = static_cast<std::uint64_t>(idx.size());
            ops += 2 * m * d + 2 * m * d * d + 2 * m * d + d;
        }
        res.block = LocalityRun{"block_kaczmarz", h.iterations(), cost.loads(), cost.cost(), ops,
                                (h.x_final - x_star).squaredNorm()};
    }
    return res;
}

LocalityResult cmd_locality(const Config& c, const CommandOptions& o) {
    check_known(c);
    LocalityParams prm;
    prm.n = positive_int(c, "locality", "n", prm.n);
    prm.d = positive_int(c, "locality", "d", prm.d);
    prm.chunk = positive_int(c, "locality", "chunk", prm.chunk);
    prm.load_cost = c.get_double("locality", "load_cost").value_or(prm.load_cost);
    prm.error_tol = c.get_double("locality", "error_tol").value_or(prm.error_tol);
    if (prm.d > prm.n) c.fail("locality", "d", "must not exceed n");
    LocalityResult res = run_locality(prm, resolve_seed(c, o));

    std::ostringstream out;
    out << "# rbas-locality v1\n";
    out << "# n=" << res.n << " d=" << res.d << " chunk=" << res.chunk << " chunks=" << res.chunks
        << " seed=" << res.seed << '\n';
    out << "solver,iterations,chunk_loads,load_cost,arith_ops,final_error_sq\n";
    for (const auto* r : {&res.oracle, &res.block})
        out << r->solver << ',' << r->iterations << ',' << r->chunk_loads << ',' << format_double(r->load_cost) << ','
            << r->arith_ops << ',' << format_double(r->final_error_sq) << '\n';
    res.file = output_path(c, o, "locality", "output", "locality.csv");
    write_file_atomic(res.file, out.str());
    return res;
}

JlResult cmd_jl_dim(const Config& c, const CommandOptions& o) {
    check_known(c);
    JlResult res;
    const std::string dist = c.get_string("jl", "distribution", "achlioptas");
    try {
        res.distribution = sketch_distribution_from_string(dist);
    } catch (const std::invalid_argument&) {
        c.fail("jl", "distribution", "unknown distribution '" + dist + "'");
    }
    const bool preset = res.distribution == SketchDistribution::Achlioptas;
    JlParams& p = res.params;
    p.C = o.C ? *o.C : c.get_double("jl", "C").value_or(preset ? kAchlioptasC : 0.0);
    p.w = o.w ? *o.w : c.get_double("jl", "w").value_or(preset ? kAchlioptasW : 0.0);
    p.rho = o.rho ? *o.rho : c.get_double("jl", "rho").value_or(4.0);
    p.epsilon = o.epsilon ? *o.epsilon : static_cast<std::size_t>(positive_int(c, "jl", "epsilon", 20));
    if (!(p.C > 0.0)) throw ConfigError(c.origin() + ": [jl] C must be positive (no preset for " + dist + ")");
    if (p.w < 0.0 || p.rho < 0.0) throw ConfigError(c.origin() + ": [jl] w and rho must be non-negative");
    if (p.epsilon < 1) throw ConfigError("--epsilon must be positive");
    res.threshold = jl_embedding_threshold(p.C, p.w, p.rho);
    p.p = jl_min_embedding_dim(p.C, p.w, p.rho);
    res.failure_bound = jl_failure_bound(p.rho, static_cast<double>(p.epsilon));

    std::ostringstream out;
    out << "# rbas-jl v1\n";
    out << "distribution,C,w,rho,threshold,p,epsilon,failure_bound\n";
    out << to_string(res.distribution) << ',' << format_double(p.C) << ',' << format_double(p.w) << ','
        << format_double(p.rho) << ',' << format_double(res.threshold) << ',' << p.p << ',' << p.epsilon << ','
        << format_double(res.failure_bound) << '\n';
    const auto file = output_path(c, o, "jl", "output", "jl.csv");
    write_file_atomic(file, out.str());
    res.files.push_back(file);

    if (const auto dump = c.get_string("jl", "dump")) {
        const auto n = c.get_int("jl", "n");
        if (!n) c.fail("jl", "dump", "needs [jl] n, the number of rows to sketch");
        if (*n < 1) c.fail("jl", "n", "must be positive");
        const std::uint64_t seed = resolve_seed(c, o);
        const auto ens = draw_ensemble(*n, p, res.distribution, derive_seed(seed, 2));
        write_ensemble_csv(o.out / *dump, ens);
        res.files.push_back(o.out / *dump);
    }
    return res;
}

}  // namespace rbas
