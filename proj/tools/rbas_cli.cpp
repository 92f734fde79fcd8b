// rbas: experiment runner for randomized block adaptive solvers.
//
//   rbas solve --config run.ini --out results/
//   rbas meany-table --samples 10000 --seed 1
//   rbas gamma-table
//   rbas locality --out results/
//   rbas jl-dim --rho 4 --epsilon 20
//
// Exit codes: 0 success, 2 config error, 3 numerical failure.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rbas/commands.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized block adaptive solvers: experiments and certificates"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::optional<std::size_t> samples;
    std::optional<double> C, w, rho;
    std::optional<std::size_t> epsilon;

    auto common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config_path, "Experiment config file");
        if (needs_config) opt->required();
        sub->add_option("--seed", seed, "Master seed (default: config seed, else a hash of the config)");
        sub->add_option("--out", out, "Output directory")->capture_default_str();
    };
    auto* solve = app.add_subcommand("solve", "Run one solver and write its history");
    common(solve, true);
    auto* meany = app.add_subcommand("meany-table", "Quantiles of the sampled Meany constant");
    common(meany, false);
    meany->add_option("--samples", samples, "Number of random bases");
    auto* gamma = app.add_subcommand("gamma-table", "Worst-case rates of row partitions");
    common(gamma, false);
    gamma->add_option("--samples", samples, "Number of random bases per partition");
    auto* locality = app.add_subcommand("locality", "Chunk-load cost of an oracle solver vs block Kaczmarz");
    common(locality, false);
    auto* jl = app.add_subcommand("jl-dim", "Embedding dimension and failure bound for sketch ensembles");
    common(jl, false);
    jl->add_option("--C", C, "Distribution constant C");
    jl->add_option("--w", w, "Distribution constant w");
    jl->add_option("--rho", rho, "Confidence exponent");
    jl->add_option("--epsilon", epsilon, "Ensemble size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kConfigError;
    }

    try {
        const rbas::Config config =
            config_path.empty() ? rbas::Config::parse("", "<defaults>") : rbas::Config::load(config_path);
        rbas::CommandOptions opts;
        opts.seed = seed;
        opts.out = out;
        opts.samples = samples;
        opts.C = C;
        opts.w = w;
        opts.rho = rho;
        opts.epsilon = epsilon;

        if (*solve) {
            const auto r = rbas::cmd_solve(config, opts);
            std::cout << r.method << ": " << r.history.iterations() << " iterations, "
                      << rbas::to_string(r.history.reason) << ", final error_sq "
                      << r.history.final_error_sq() << '\n';
        } else if (*meany) {
            const auto r = rbas::cmd_meany_table(config, opts);
            std::cout << "median " << r.estimate.quantiles[3] << ", mean " << r.estimate.mean << ", sup "
                      << r.estimate.sup_observed << " -> " << r.file.string() << '\n';
        } else if (*gamma) {
            const auto r = rbas::cmd_gamma_table(config, opts);
            for (const auto& g : r.reports) std::cout << g.partition_id << ": gamma " << g.gamma << '\n';
        } else if (*locality) {
            const auto r = rbas::cmd_locality(config, opts);
            for (const auto* run : {&r.oracle, &r.block})
                std::cout << run->solver << ": " << run->chunk_loads << " chunk loads, " << run->arith_ops
                          << " ops\n";
        } else if (*jl) {
            const auto r = rbas::cmd_jl_dim(config, opts);
            std::cout << "p = " << r.params.p << ", failure bound " << r.failure_bound << '\n';
        }
    } catch (const rbas::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const rbas::ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid setup: " << e.what() << '\n';
        return kConfigError;
    } catch (const rbas::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
