// place: batch sensor selection for linear Gaussian inverse problems.
//
// Subcommands:
//   place run --config <file> [--no-timing]     execute configured algorithms
//   place describe --problem <file>             summarize a problem instance
//   place generate --spec <file> --out <file>   build a reproducible test problem

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "oed/oed.hpp"

namespace {

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return 0;
    } catch (const oed::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const oed::ProblemError& e) {
        std::cerr << "problem error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sensor selection by greedy expected-information-gain maximization"};
    app.require_subcommand(1);

    std::string config_path;
    bool no_timing = false;
    CLI::App* run_cmd = app.add_subcommand("run", "execute a run configuration");
    run_cmd->add_option("--config", config_path, "run configuration JSON")->required();
    run_cmd->add_flag("--no-timing", no_timing, "write wall_time as 0 for byte-stable output");

    std::string problem_path;
    CLI::App* describe_cmd = app.add_subcommand("describe", "summarize a problem instance");
    describe_cmd->add_option("--problem", problem_path, "problem JSON")->required();

    std::string spec_path;
    std::string out_path;
    CLI::App* generate_cmd = app.add_subcommand("generate", "build a reproducible test problem");
    generate_cmd->add_option("--spec", spec_path, "generator spec JSON")->required();
    generate_cmd->add_option("--out", out_path, "output problem JSON")->required();

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) {
        return guarded([&] {
            oed::RunConfig config = oed::load_config(config_path);
            config.no_timing = no_timing;
            const oed::RunReport report = oed::run(config);
            std::cout << "wrote report.json and " << report.results.size()
                      << " trace file(s) to " << config.output_dir << "\n";
        });
    }
    if (describe_cmd->parsed()) {
        return guarded([&] {
            const oed::InverseProblem problem = oed::load_problem(problem_path);
            std::cout << oed::format_summary(oed::describe(problem));
        });
    }
    return guarded([&] {
        const oed::GeneratorSpec spec = oed::load_spec(spec_path);
        oed::InverseProblem problem;
        try {
            problem = oed::generate_problem(spec);
        } catch (const oed::Error& e) {
            throw oed::ProblemError(std::string("cannot generate problem: ") + e.what());
        }
        oed::save_problem(problem, out_path);
        std::cout << "wrote " << out_path << "\n";
    });
}
