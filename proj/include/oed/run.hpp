#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "oed/errors.hpp"
#include "oed/greedy.hpp"
#include "oed/io.hpp"
#include "oed/problem.hpp"

namespace oed {

inline constexpr const char* kToolVersion = "0.1.0";

/// One batch run: which problem, which budget, which algorithms, where to
/// write the outputs.
struct RunConfig {
    std::string problem_path;               // used when generator is empty
    std::optional<GeneratorSpec> generator; // inline problem description
    Eigen::Index budget = 1;
    std::vector<std::string> algorithms;    // greedy | lazy | exhaustive | stochastic
    GainPath gain_path = GainPath::measurement;
    std::optional<Eigen::Index> low_rank;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    double exhaustive_cap = 1e6;
    double epsilon = 0.1;                   // stochastic sampling parameter
    bool no_timing = false;                 // zero out wall_time fields
};

inline RunConfig config_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig cfg;
    try {
        if (!doc.contains("problem"))
            throw ConfigError("config is missing \"problem\" (path or generator spec)");
        const json& prob = doc["problem"];
        if (prob.is_string()) {
            cfg.problem_path = prob.get<std::string>();
        } else if (prob.is_object()) {
            try {
                cfg.generator = spec_from_json(prob);
            } catch (const ProblemError& e) {
                throw ConfigError(std::string("inline problem spec: ") + e.what());
            }
        } else {
            throw ConfigError("\"problem\" must be a file path or a generator spec object");
        }

        if (!doc.contains("budget")) throw ConfigError("config is missing \"budget\"");
        cfg.budget = doc["budget"].get<Eigen::Index>();
        if (cfg.budget < 1) throw ConfigError("budget must be at least 1");

        if (!doc.contains("algorithms") || !doc["algorithms"].is_array() ||
            doc["algorithms"].empty())
            throw ConfigError("config must list at least one algorithm");
        for (const json& a : doc["algorithms"]) {
            const auto name = a.get<std::string>();
            if (name != "greedy" && name != "lazy" && name != "exhaustive" &&
                name != "stochastic")
                throw ConfigError("unknown algorithm \"" + name + "\"");
            if (std::find(cfg.algorithms.begin(), cfg.algorithms.end(), name) !=
                cfg.algorithms.end())
                throw ConfigError("algorithm \"" + name + "\" listed twice");
            cfg.algorithms.push_back(name);
        }

        if (doc.contains("gain_path")) {
            const auto path = doc["gain_path"].get<std::string>();
            if (path == "measurement")
                cfg.gain_path = GainPath::measurement;
            else if (path == "parameter")
                cfg.gain_path = GainPath::parameter;
            else
                throw ConfigError("gain_path must be \"measurement\" or \"parameter\"");
        }
        if (doc.contains("low_rank") && !doc["low_rank"].is_null()) {
            cfg.low_rank = doc["low_rank"].get<Eigen::Index>();
            if (*cfg.low_rank < 1) throw ConfigError("low_rank must be at least 1");
        }
        if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
        if (doc.contains("exhaustive_cap")) {
            cfg.exhaustive_cap = doc["exhaustive_cap"].get<double>();
            if (!(cfg.exhaustive_cap >= 1.0)) throw ConfigError("exhaustive_cap must be >= 1");
        }
        if (doc.contains("epsilon")) {
            cfg.epsilon = doc["epsilon"].get<double>();
            if (!(cfg.epsilon > 0.0) || !(cfg.epsilon < 1.0))
                throw ConfigError("epsilon must lie in (0, 1)");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path + ": " + e.what());
    }
    return config_from_json(doc);
}

/// Everything a run produced, as written to report.json.
struct RunReport {
    Eigen::Index d = 0;
    Eigen::Index n = 0;
    std::string instance_hash;                // hash of the Gram matrix
    std::vector<PlacementResult> results;     // one per requested algorithm, in order
    std::optional<double> guarantee_ratio;    // present when exhaustive ran
    std::string tool_version = kToolVersion;
};

inline json report_to_json(const RunReport& report) {
    json doc;
    doc["tool_version"] = report.tool_version;
    json instance;
    instance["d"] = report.d;
    instance["n"] = report.n;
    instance["gram_hash"] = report.instance_hash;
    doc["instance"] = std::move(instance);
    json results = json::array();
    for (const PlacementResult& r : report.results) results.push_back(result_to_json(r));
    doc["results"] = std::move(results);
    if (report.guarantee_ratio) doc["guarantee_ratio"] = *report.guarantee_ratio;
    return doc;
}

/// Loads or generates the configured problem. Failures here are problem
/// errors regardless of which library call raised them.
inline InverseProblem acquire_problem(const RunConfig& config) {
    if (config.generator) {
        try {
            return generate_problem(*config.generator);
        } catch (const Error& e) {
            throw ProblemError(std::string("cannot generate problem: ") + e.what());
        }
    }
    return load_problem(config.problem_path);
}

/// Executes every configured algorithm on the configured instance and
/// writes report.json plus one <algorithm>.csv trace per run into
/// output_dir.
inline RunReport run(const RunConfig& config) {
    const InverseProblem problem = acquire_problem(config);
    PreparedDesign prep = assemble_rows(problem);
    if (config.low_rank) prep = low_rank_compress(prep, *config.low_rank);

    RunReport report;
    report.d = prep.n_sensors();
    report.n = prep.n_params();
    report.instance_hash = gram_hash(prep.gram);

    std::optional<double> greedy_phi;
    std::optional<double> exhaustive_phi;
    for (const std::string& name : config.algorithms) {
        PlacementResult result;
        if (name == "greedy")
            result = greedy_select(prep, config.budget, config.gain_path);
        else if (name == "lazy")
            result = lazy_greedy_select(prep, config.budget, config.gain_path);
        else if (name == "exhaustive")
            result = exhaustive_search(prep, config.budget, config.exhaustive_cap);
        else
            result = stochastic_greedy_select(prep, config.budget, config.epsilon, config.seed,
                                              config.gain_path);
        if (config.no_timing) result.wall_time = 0.0;
        if (name == "greedy") greedy_phi = result.phi_trace.back();
        if (name == "exhaustive") exhaustive_phi = result.phi_trace.back();
        report.results.push_back(std::move(result));
    }

    if (exhaustive_phi) {
        const double achieved =
            greedy_phi ? *greedy_phi
                       : greedy_select(prep, config.budget, config.gain_path).phi_trace.back();
        report.guarantee_ratio = *exhaustive_phi == 0.0 ? 1.0 : achieved / *exhaustive_phi;
    }

    std::filesystem::create_directories(config.output_dir);
    const std::filesystem::path dir(config.output_dir);
    for (const PlacementResult& result : report.results)
        write_csv(result, (dir / (result.algorithm + ".csv")).string());
    std::ofstream out(dir / "report.json", std::ios::binary);
    if (!out) throw ProblemError("cannot open report.json under " + config.output_dir);
    out << report_to_json(report).dump(2) << "\n";
    return report;
}

/// Quick look at an instance: sizes, noise range, Gram spectrum, and a
/// compression rank that keeps all but 1e-8 of the spectral mass.
struct InstanceSummary {
    Eigen::Index d = 0;
    Eigen::Index n = 0;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    std::vector<double> top_eigenvalues; // up to 10, descending
    Eigen::Index suggested_rank = 1;
};

inline InstanceSummary describe(const InverseProblem& problem) {
    const PreparedDesign prep = assemble_rows(problem);
    InstanceSummary s;
    s.d = prep.n_sensors();
    s.n = prep.n_params();
    s.sigma_min = problem.noise_std.minCoeff();
    s.sigma_max = problem.noise_std.maxCoeff();

    Eigen::SelfAdjointEigenSolver<Matrix> es(prep.gram, Eigen::EigenvaluesOnly);
    Vector ev = es.eigenvalues().reverse(); // descending
    for (Eigen::Index j = 0; j < std::min<Eigen::Index>(10, ev.size()); ++j)
        s.top_eigenvalues.push_back(ev[j]);

    const Eigen::Index full = std::min(s.d, s.n);
    const double total = ev.head(full).cwiseMax(0.0).sum();
    double tail = total;
    s.suggested_rank = full;
    for (Eigen::Index r = 0; r < full; ++r) {
        tail -= std::max(ev[r], 0.0);
        if (tail <= 1e-8 * total) {
            s.suggested_rank = std::max<Eigen::Index>(r + 1, 1);
            break;
        }
    }
    return s;
}

inline std::string format_summary(const InstanceSummary& s) {
    std::string text;
    text += "sensors (d): " + std::to_string(s.d) + "\n";
    text += "parameters (n): " + std::to_string(s.n) + "\n";
    text += "noise std range: [" + format_double(s.sigma_min) + ", " +
            format_double(s.sigma_max) + "]\n";
    text += "top Gram eigenvalues:";
    for (double ev : s.top_eigenvalues) text += " " + format_double(ev);
    text += "\n";
    text += "suggested low-rank rank (1e-8 spectral-mass cutoff): " +
            std::to_string(s.suggested_rank) + "\n";
    return text;
}

} // namespace oed
