#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rbas/commands.hpp"
#include "rbas/text_io.hpp"

using namespace rbas;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "rbas_cli_test" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

CommandOptions quiet(const std::filesystem::path& out, std::ostream& log) {
    CommandOptions o;
    o.out = out;
    o.log = &log;
    return o;
}

}  // namespace

TEST_CASE("config grammar: sections, comments, typed values") {
    const auto c = Config::parse("seed = 9  # top\n\n[sampler]\nname = agmon\npartition = 1,4; 2,3\n"
                                 "[x0]\nvalues = 1, -2.5, 3e2\nflag = yes\n");
    CHECK(c.get_u64("", "seed") == 9u);
    CHECK(c.get_string("sampler", "name") == std::optional<std::string>("agmon"));
    CHECK(*c.get_blocks("sampler", "partition") == std::vector<std::vector<std::int64_t>>{{0, 3}, {1, 2}});
    CHECK(*c.get_doubles("x0", "values") == std::vector<double>{1, -2.5, 300});
    CHECK(c.get_bool("x0", "flag") == true);
    CHECK_FALSE(c.has("x0", "missing"));
    CHECK(c.keys("sampler") == std::vector<std::string>{"name", "partition"});
}

TEST_CASE("config errors carry line numbers") {
    auto message = [](const std::string& text) {
        try {
            Config::parse(text, "f.ini");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("[a]\nno equals\n") == "f.ini:2: expected 'key = value'");
    CHECK(message("[a\n") == "f.ini:1: unterminated section header");
    CHECK(message("[a]\nk = 1\nk = 2\n").find("f.ini:3: duplicate key") == 0);
    CHECK(message("[a]\n[a]\n").find("f.ini:2: duplicate section") == 0);

    const auto c = Config::parse("[stop]\n\nmax_iter = ten\n", "g.ini");
    CHECK_THROWS_WITH_AS(c.get_int("stop", "max_iter"), doctest::Contains("g.ini:3:"), ConfigError);
    const auto b = Config::parse("[sampler]\npartition = 0,1\n", "h.ini");
    CHECK_THROWS_WITH_AS(b.get_blocks("sampler", "partition"), doctest::Contains("1-based"), ConfigError);

    std::ostringstream log;
    const auto unknown = Config::parse("[sampler]\nname = agmon\nnmae = x\n", "u.ini");
    CHECK_THROWS_WITH_AS(cmd_solve(unknown, quiet(fresh_dir("unknown"), log)), doctest::Contains("u.ini:3: unknown key"),
                         ConfigError);
    const auto section = Config::parse("[sytem]\n", "s.ini");
    CHECK_THROWS_WITH_AS(cmd_solve(section, quiet(fresh_dir("section"), log)),
                         doctest::Contains("unknown section [sytem]"), ConfigError);
    const auto bad_name = Config::parse("[system]\ngenerator = identity\n[sampler]\nname = foo\n", "n.ini");
    CHECK_THROWS_WITH_AS(cmd_solve(bad_name, quiet(fresh_dir("name"), log)), doctest::Contains("n.ini:4:"),
                         ConfigError);
}

TEST_CASE("seed resolution order") {
    std::ostringstream log;
    CommandOptions o;
    o.log = &log;
    const auto with_seed = Config::parse("seed = 5\n");
    CHECK(resolve_seed(with_seed, o) == 5);
    o.seed = 7;
    CHECK(resolve_seed(with_seed, o) == 7);
    o.seed.reset();
    const auto no_seed = Config::parse("[stop]\nmax_iter = 1\n");
    CHECK(resolve_seed(no_seed, o) == fnv1a(no_seed.text()));
    CHECK(log.str().find(std::to_string(fnv1a(no_seed.text()))) != std::string::npos);
}

TEST_CASE("solve: identity system converges and writes versioned files") {
    std::ostringstream log;
    const auto dir = fresh_dir("identity");
    const auto c = Config::parse(
        "seed = 1\n[system]\ngenerator = identity\nn = 2\n[sampler]\nname = cyclic_vector_kaczmarz\n"
        "[stop]\nerror_tol = 1e-20\n");
    const auto r = cmd_solve(c, quiet(dir, log));
    CHECK(r.history.iterations() == 2);
    CHECK(r.history.final_error_sq() <= 1e-20);
    const auto hist = slurp(dir / "history.csv");
    CHECK(hist.rfind("# rbas-history v1\n", 0) == 0);
    CHECK(slurp(dir / "summary.csv").rfind("# rbas-summary v1\n", 0) == 0);
    CHECK(slurp(dir / "tau.csv").rfind("# rbas-tau v1\n", 0) == 0);
    CHECK(slurp(dir / "nu.csv").rfind("# rbas-nu v1\n", 0) == 0);
    CHECK(std::filesystem::exists(dir / "x_final.csv"));
}

TEST_CASE("solve: partition III reaches 1e-8 within 25 iterations") {
    std::ostringstream log;
    const auto c = Config::parse(
        "seed = 1\n[system]\ngenerator = partition_example\n[sampler]\nname = cyclic_block_kaczmarz\n"
        "partition = 1,4; 2,3\n[stop]\nerror_tol = 1e-8\nmax_iter = 100\n");
    const auto r = cmd_solve(c, quiet(fresh_dir("fig"), log));
    CHECK(r.history.reason == StopReason::ErrorTol);
    CHECK(r.history.iterations() <= 25);
}

TEST_CASE("solve: identical configs replay byte-identical outputs") {
    std::ostringstream log;
    const std::string text =
        "[system]\ngenerator = random\nn = 8\nd = 5\nrank = 4\n[sampler]\nname = greedy_randomized_block\n"
        "blocks = 3\n[x0]\nkind = random\n[stop]\nmax_iter = 40\n";
    const auto a = fresh_dir("replay_a"), b = fresh_dir("replay_b");
    cmd_solve(Config::parse(text), quiet(a, log));
    cmd_solve(Config::parse(text), quiet(b, log));
    for (const char* f : {"history.csv", "summary.csv", "tau.csv", "nu.csv", "x_final.csv"}) {
        INFO(f);
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CommandOptions o = quiet(fresh_dir("replay_c"), log);
    o.seed = 12345;
    cmd_solve(Config::parse(text), o);
    CHECK(slurp(o.out / "history.csv") != slurp(a / "history.csv"));
}

TEST_CASE("solve: file input, explicit x0, sketch and metric options") {
    std::ostringstream log;
    const auto dir = fresh_dir("files");
    write_file_atomic(dir / "a.csv", "1,0\n0,2\n1,1\n");
    write_file_atomic(dir / "b.csv", "1\n2\n2\n");
    write_file_atomic(dir / "m.csv", "2,0\n0,1\n");
    const std::string text = "seed = 3\n[system]\nmatrix = " + (dir / "a.csv").string() + "\nrhs = " +
                             (dir / "b.csv").string() +
                             "\n[sampler]\nname = adaptive_sketch_project\nsketch_count = 5\nmetric = " +
                             (dir / "m.csv").string() +
                             "\n[x0]\nkind = explicit\nvalues = 3, -1\n[stop]\nerror_tol = 1e-24\nmax_iter = 500\n";
    const auto r = cmd_solve(Config::parse(text), quiet(dir, log));
    CHECK(r.history.reason == StopReason::ErrorTol);
    CHECK((r.x_final - Vector::Ones(2)).norm() < 1e-10);

    const auto bad = Config::parse("[system]\ngenerator = identity\n[sampler]\nname = agmon\n[x0]\nkind = explicit\n"
                                   "values = 1\n", "x.ini");
    CHECK_THROWS_WITH_AS(cmd_solve(bad, quiet(dir, log)), doctest::Contains("x.ini:7:"), ConfigError);
}

TEST_CASE("meany-table: one sample gives equal quantiles; default run matches the published median") {
    std::ostringstream log;
    CommandOptions o = quiet(fresh_dir("meany"), log);
    o.samples = 1;
    const auto one = cmd_meany_table(Config::parse("seed = 2\n"), o);
    for (const double q : one.estimate.quantiles) CHECK(q == one.estimate.quantiles[0]);
    o.samples.reset();
    const auto full = cmd_meany_table(Config::parse("seed = 1\n"), o);
    CHECK(full.estimate.samples.size() == 10000);
    CHECK(full.estimate.quantiles[3] >= 0.07);
    CHECK(full.estimate.quantiles[3] <= 0.11);
    CHECK(full.estimate.sup_observed >= 0.99);
    CHECK(slurp(full.file).rfind("# rbas-meany v1\n", 0) == 0);
}

TEST_CASE("gamma-table: defaults, single block and reordered blocks") {
    std::ostringstream log;
    CommandOptions o = quiet(fresh_dir("gamma"), log);
    o.samples = 300;
    const auto def = cmd_gamma_table(Config::parse("seed = 1\n"), o);
    REQUIRE(def.reports.size() == 3);
    CHECK(def.reports[0].gamma == doctest::Approx(0.880).epsilon(0.01 / 0.88));
    CHECK(def.reports[1].gamma == doctest::Approx(0.372).epsilon(0.01 / 0.372));
    CHECK(def.reports[2].gamma == doctest::Approx(0.372).epsilon(0.01 / 0.372));
    const auto custom = cmd_gamma_table(
        Config::parse("seed = 4\n[system]\ngenerator = partition_example\n[gamma]\npartition.all = 1,2,3,4\n"
                      "partition.A = 1,3; 2,4\npartition.B = 4,2; 3,1\n"),
        o);
    REQUIRE(custom.reports.size() == 3);
    CHECK(custom.reports[0].gamma <= 1e-10);
    CHECK(custom.reports[1].gamma == custom.reports[2].gamma);
    CHECK(custom.reports[1].partition_id == "A");
}

TEST_CASE("chunk cost model charges once per switch") {
    ChunkCostModel m(10, 2.5);
    CHECK_FALSE(m.resident_chunk().has_value());
    for (const Eigen::Index row : {0, 5, 9, 10, 19, 3, 3, 25}) m.touch(row);
    CHECK(m.loads() == 4);
    CHECK(m.cost() == 10.0);
    CHECK(m.resident_chunk() == Eigen::Index(2));
}

TEST_CASE("locality: counters on small instances") {
    LocalityParams p;
    p.n = 2000;
    p.d = 10;
    p.chunk = 2000;
    const auto single = run_locality(p, 3);
    CHECK(single.chunks == 1);
    CHECK(single.oracle.chunk_loads == 1);
    CHECK(single.block.chunk_loads == 1);
    CHECK(single.oracle.final_error_sq == 0.0);
    CHECK(single.oracle.arith_ops == 20);

    p.chunk = 100;
    double loads = 0.0;
    const int runs = 200;
    for (int s = 0; s < runs; ++s) {
        const auto r = run_locality(p, std::uint64_t(s));
        CHECK(r.block.chunk_loads <= r.chunks);
        CHECK(r.block.final_error_sq <= p.error_tol);
        loads += double(r.oracle.chunk_loads);
    }
    // First load plus d - 1 transitions, each a switch with probability about 1 - 1/#chunks.
    const double expect = 1.0 + (p.d - 1) * (1.0 - 1.0 / 20.0);
    CHECK(std::abs(loads / runs - expect) < 0.5);
}

TEST_CASE("jl-dim command") {
    std::ostringstream log;
    const auto dir = fresh_dir("jl");
    const auto r = cmd_jl_dim(Config::parse("[jl]\nn = 12\ndump = ens.csv\nepsilon = 3\n"), quiet(dir, log));
    CHECK(r.params.p == 15);
    CHECK(r.failure_bound == std::ldexp(1.0, -12));
    CHECK(slurp(dir / "jl.csv").rfind("# rbas-jl v1\n", 0) == 0);
    const auto ens = read_ensemble_csv(dir / "ens.csv");
    CHECK(ens.size() == 3);
    CHECK(ens.rows() == 12);
    CommandOptions o = quiet(dir, log);
    o.epsilon = 20;
    CHECK(cmd_jl_dim(Config::parse(""), o).failure_bound == std::ldexp(1.0, -80));
    CHECK_THROWS_AS(cmd_jl_dim(Config::parse("[jl]\ndistribution = gaussian\n"), o), ConfigError);
}
