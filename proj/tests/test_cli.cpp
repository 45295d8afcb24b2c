#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oed/oed.hpp"

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

std::string make_temp_dir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "place_test_XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    return tmpl;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

CliResult run_place(const std::string& args, const std::string& work_dir) {
    const std::string log = work_dir + "/cli_output.txt";
    const std::string cmd = std::string(PLACE_BIN_PATH) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.output = slurp(log);
    return res;
}

int count_lines(const std::string& text) {
    int lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    return lines;
}

} // namespace

TEST_CASE("generate and describe round-trip a heat problem") {
    const std::string dir = make_temp_dir();
    spit(dir + "/spec.json",
         R"({"kind": "heat1d", "n": 64, "d": 16, "seed": 11, "noise_std": 0.05})");

    const auto gen = run_place("generate --spec " + dir + "/spec.json --out " + dir +
                                   "/problem.json",
                               dir);
    REQUIRE(gen.exit_code == 0);

    const auto desc = run_place("describe --problem " + dir + "/problem.json", dir);
    REQUIRE(desc.exit_code == 0);
    REQUIRE(desc.output.find("sensors (d): 16") != std::string::npos);
    REQUIRE(desc.output.find("parameters (n): 64") != std::string::npos);

    // the problem file itself round-trips through the library loader
    const auto problem = oed::load_problem(dir + "/problem.json");
    REQUIRE(problem.n_sensors() == 16);
    REQUIRE(problem.n_params() == 64);
}

TEST_CASE("describe reports a geometrically decaying Gram spectrum") {
    const std::string dir = make_temp_dir();
    spit(dir + "/spec.json", R"({"kind": "synthetic", "n": 10, "d": 10, "seed": 3,)"
                             R"( "decay": 0.25})");
    auto gen = run_place("generate --spec " + dir + "/spec.json --out " + dir + "/problem.json",
                         dir);
    REQUIRE(gen.exit_code == 0);

    const auto desc = run_place("describe --problem " + dir + "/problem.json", dir);
    REQUIRE(desc.exit_code == 0);

    const auto pos = desc.output.find("top Gram eigenvalues:");
    REQUIRE(pos != std::string::npos);
    std::istringstream line(desc.output.substr(pos + std::string("top Gram eigenvalues:").size()));
    std::vector<double> ev;
    double x = 0.0;
    while (ev.size() < 10 && line >> x) ev.push_back(x);
    REQUIRE(ev.size() == 10);
    for (std::size_t j = 1; j < ev.size(); ++j)
        REQUIRE(std::abs(ev[j] / ev[j - 1] - 0.0625) < 1e-6);

    // with decay 0.25 the 1e-8 mass cutoff lands at rank 7
    REQUIRE(desc.output.find("suggested low-rank rank (1e-8 spectral-mass cutoff): 7") !=
            std::string::npos);
}

TEST_CASE("describe fails cleanly on malformed problem files") {
    const std::string dir = make_temp_dir();
    spit(dir + "/broken.json", R"({"n": 4, "d": 2, "forward_map": [[1, 0)");
    const auto desc = run_place("describe --problem " + dir + "/broken.json", dir);
    REQUIRE(desc.exit_code == 3);

    const auto missing = run_place("describe --problem " + dir + "/nope.json", dir);
    REQUIRE(missing.exit_code == 3);
}

TEST_CASE("run writes matching traces for greedy and lazy") {
    const std::string dir = make_temp_dir();
    oed::json config;
    config["problem"] = {{"kind", "heat1d"}, {"n", 64}, {"d", 16}, {"seed", 5},
                         {"noise_std", 0.05}};
    config["budget"] = 4;
    config["algorithms"] = {"greedy", "lazy"};
    config["output_dir"] = dir + "/out";
    spit(dir + "/config.json", config.dump());

    const auto run = run_place("run --config " + dir + "/config.json", dir);
    REQUIRE(run.exit_code == 0);

    const std::string greedy_csv = slurp(dir + "/out/greedy.csv");
    const std::string lazy_csv = slurp(dir + "/out/lazy.csv");
    REQUIRE(count_lines(greedy_csv) == 5); // header + one row per step
    REQUIRE(count_lines(lazy_csv) == 5);
    REQUIRE(greedy_csv.rfind("step,candidate,gain,phi,cumulative_gain_evals\n", 0) == 0);

    const auto report = oed::json::parse(slurp(dir + "/out/report.json"));
    REQUIRE(report["results"].size() == 2);
    REQUIRE(report["results"][0]["algorithm"] == "greedy");
    REQUIRE(report["results"][1]["algorithm"] == "lazy");
    REQUIRE(report["results"][0]["selected"] == report["results"][1]["selected"]);
    REQUIRE(report["instance"]["d"] == 16);
    REQUIRE(report["instance"]["n"] == 64);
    REQUIRE(report["tool_version"] == oed::kToolVersion);
    REQUIRE(report["results"][0]["gain_evals"].get<std::uint64_t>() >=
            report["results"][1]["gain_evals"].get<std::uint64_t>());

    // phi column is nondecreasing down the file
    std::istringstream rows(greedy_csv.substr(greedy_csv.find('\n') + 1));
    std::string row;
    double prev_phi = 0.0;
    while (std::getline(rows, row)) {
        std::istringstream fields(row);
        std::string field;
        for (int i = 0; i < 4; ++i) std::getline(fields, field, ',');
        const double phi = std::stod(field);
        REQUIRE(phi >= prev_phi);
        prev_phi = phi;
    }
}

TEST_CASE("run rejects invalid configs with exit code two") {
    const std::string dir = make_temp_dir();

    spit(dir + "/zero_budget.json",
         R"({"problem": {"kind": "synthetic", "n": 6, "d": 6, "seed": 1},)"
         R"( "budget": 0, "algorithms": ["greedy"], "output_dir": ")" + dir + R"("})");
    REQUIRE(run_place("run --config " + dir + "/zero_budget.json", dir).exit_code == 2);

    spit(dir + "/bad_algorithm.json",
         R"({"problem": {"kind": "synthetic", "n": 6, "d": 6, "seed": 1},)"
         R"( "budget": 2, "algorithms": ["simulated_annealing"], "output_dir": ")" + dir + R"("})");
    REQUIRE(run_place("run --config " + dir + "/bad_algorithm.json", dir).exit_code == 2);

    spit(dir + "/no_algorithms.json",
         R"({"problem": {"kind": "synthetic", "n": 6, "d": 6, "seed": 1},)"
         R"( "budget": 2, "algorithms": [], "output_dir": ")" + dir + R"("})");
    REQUIRE(run_place("run --config " + dir + "/no_algorithms.json", dir).exit_code == 2);

    spit(dir + "/not_json.json", "budget: 2");
    REQUIRE(run_place("run --config " + dir + "/not_json.json", dir).exit_code == 2);

    REQUIRE(run_place("run --config " + dir + "/absent.json", dir).exit_code == 2);
}

TEST_CASE("run distinguishes problem errors and algorithm errors") {
    const std::string dir = make_temp_dir();

    spit(dir + "/missing_problem.json",
         R"({"problem": ")" + dir + R"(/void.json", "budget": 2,)"
         R"( "algorithms": ["greedy"], "output_dir": ")" + dir + R"("})");
    REQUIRE(run_place("run --config " + dir + "/missing_problem.json", dir).exit_code == 3);

    // budget larger than the candidate count surfaces as an algorithm error
    spit(dir + "/over_budget.json",
         R"({"problem": {"kind": "synthetic", "n": 6, "d": 4, "seed": 1},)"
         R"( "budget": 5, "algorithms": ["greedy"], "output_dir": ")" + dir + R"("})");
    REQUIRE(run_place("run --config " + dir + "/over_budget.json", dir).exit_code == 4);

    // an infeasible exhaustive enumeration is also an algorithm error
    spit(dir + "/huge.json",
         R"({"problem": {"kind": "synthetic", "n": 4, "d": 40, "seed": 1}, "budget": 15,)"
         R"( "algorithms": ["exhaustive"], "exhaustive_cap": 1000, "output_dir": ")" +
             dir + R"("})");
    REQUIRE(run_place("run --config " + dir + "/huge.json", dir).exit_code == 4);
}

TEST_CASE("run reports the guarantee ratio when exhaustive search runs") {
    const std::string dir = make_temp_dir();
    oed::json config;
    config["problem"] = {{"kind", "synthetic"}, {"n", 8}, {"d", 8}, {"seed", 2},
                         {"decay", 0.7}};
    config["budget"] = 3;
    config["algorithms"] = {"greedy", "exhaustive"};
    config["output_dir"] = dir + "/out";
    spit(dir + "/config.json", config.dump());

    REQUIRE(run_place("run --config " + dir + "/config.json", dir).exit_code == 0);
    const auto report = oed::json::parse(slurp(dir + "/out/report.json"));
    REQUIRE(report.contains("guarantee_ratio"));
    REQUIRE(report["guarantee_ratio"].get<double>() >= 0.632);
    REQUIRE(report["guarantee_ratio"].get<double>() <= 1.0 + 1e-12);
}

TEST_CASE("repeat runs with --no-timing are byte-identical") {
    const std::string dir = make_temp_dir();
    for (const char* sub : {"a", "b"}) {
        oed::json config;
        config["problem"] = {{"kind", "heat1d"}, {"n", 48}, {"d", 12}, {"seed", 8},
                             {"noise_std", 0.05}};
        config["budget"] = 3;
        config["algorithms"] = {"greedy", "lazy", "stochastic"};
        config["seed"] = 99;
        config["output_dir"] = dir + "/" + sub;
        spit(dir + "/config_" + sub + ".json", config.dump());
        REQUIRE(run_place("run --no-timing --config " + dir + "/config_" + sub + ".json", dir)
                    .exit_code == 0);
    }
    REQUIRE(slurp(dir + "/a/report.json") == slurp(dir + "/b/report.json"));
    for (const char* algo : {"greedy", "lazy", "stochastic"}) {
        REQUIRE(slurp(dir + "/a/" + algo + ".csv") == slurp(dir + "/b/" + algo + ".csv"));
    }
    const auto report = oed::json::parse(slurp(dir + "/a/report.json"));
    for (const auto& res : report["results"]) REQUIRE(res["wall_time"].get<double>() == 0.0);
}

TEST_CASE("problem JSON serialization round-trips exactly") {
    oed::GeneratorSpec spec;
    spec.kind = oed::ProblemKind::heat1d;
    spec.n = 20;
    spec.d = 7;
    spec.seed = 31;
    const auto problem = oed::generate_problem(spec);

    const std::string dir = make_temp_dir();
    oed::save_problem(problem, dir + "/p.json");
    const auto loaded = oed::load_problem(dir + "/p.json");
    REQUIRE(loaded.forward_map == problem.forward_map);
    REQUIRE(loaded.noise_std == problem.noise_std);
    REQUIRE(loaded.prior_mean == problem.prior_mean);
    REQUIRE(loaded.prior_factor == problem.prior_factor);
    for (std::size_t i = 0; i < problem.candidates.size(); ++i) {
        REQUIRE(loaded.candidates[i].label == problem.candidates[i].label);
        REQUIRE(loaded.candidates[i].coord == problem.candidates[i].coord);
    }
}

TEST_CASE("problem JSON loader reports structural issues") {
    const oed::json good = oed::problem_to_json(oed::generate_problem([] {
        oed::GeneratorSpec s;
        s.kind = oed::ProblemKind::synthetic;
        s.n = 4;
        s.d = 3;
        s.seed = 1;
        return s;
    }()));

    auto missing = good;
    missing.erase("noise_std");
    REQUIRE_THROWS_AS(oed::problem_from_json(missing), oed::ProblemError);

    auto ragged = good;
    ragged["forward_map"][1] = {1.0, 2.0};
    REQUIRE_THROWS_AS(oed::problem_from_json(ragged), oed::ProblemError);

    auto bad_noise = good;
    bad_noise["noise_std"][0] = -1.0;
    REQUIRE_THROWS_AS(oed::problem_from_json(bad_noise), oed::ProblemError);

    auto text = good;
    text["prior_mean"][0] = "zero";
    REQUIRE_THROWS_AS(oed::problem_from_json(text), oed::ProblemError);
}

TEST_CASE("format_double survives a parse round-trip") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 12345.6789, 0.0}) {
        REQUIRE(std::stod(oed::format_double(x)) == x);
    }
}
