#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oed/errors.hpp"
#include "oed/greedy.hpp"
#include "oed/problem.hpp"

namespace oed {

using json = nlohmann::ordered_json;

/// Shortest text form that round-trips a double exactly.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// FNV-1a over raw bytes; stable fingerprint for reports.
inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

/// Hash of the Gram matrix bytes in row-major order; identifies the
/// instance every result in a report refers to.
inline std::string gram_hash(const Matrix& gram) {
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(gram.size()));
    for (Eigen::Index i = 0; i < gram.rows(); ++i)
        for (Eigen::Index j = 0; j < gram.cols(); ++j) row_major.push_back(gram(i, j));
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a64(row_major.data(), row_major.size() * sizeof(double))));
    return buf;
}

namespace detail {

inline Matrix matrix_from_json(const json& rows, Eigen::Index r, Eigen::Index c,
                               const std::string& what) {
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != r)
        throw ProblemError(what + " must be an array of " + std::to_string(r) + " rows");
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c)
            throw ProblemError(what + " row " + std::to_string(i) + " must have " +
                               std::to_string(c) + " entries");
        for (Eigen::Index j = 0; j < c; ++j) {
            const json& v = row[static_cast<std::size_t>(j)];
            if (!v.is_number()) throw ProblemError(what + " contains a non-numeric entry");
            m(i, j) = v.get<double>();
        }
    }
    return m;
}

inline Vector vector_from_json(const json& arr, Eigen::Index len, const std::string& what) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != len)
        throw ProblemError(what + " must be an array of " + std::to_string(len) + " numbers");
    Vector v(len);
    for (Eigen::Index i = 0; i < len; ++i) {
        const json& x = arr[static_cast<std::size_t>(i)];
        if (!x.is_number()) throw ProblemError(what + " contains a non-numeric entry");
        v[i] = x.get<double>();
    }
    return v;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

} // namespace detail

inline json problem_to_json(const InverseProblem& problem) {
    json doc;
    doc["n"] = problem.n_params();
    doc["d"] = problem.n_sensors();
    doc["forward_map"] = detail::matrix_to_json(problem.forward_map);
    doc["noise_std"] = detail::vector_to_json(problem.noise_std);
    doc["prior_mean"] = detail::vector_to_json(problem.prior_mean);
    doc["prior_factor"] = detail::matrix_to_json(problem.prior_factor);
    json cands = json::array();
    for (const Candidate& c : problem.candidates) {
        json entry;
        entry["label"] = c.label;
        if (c.coord) entry["coord"] = *c.coord;
        cands.push_back(std::move(entry));
    }
    doc["candidates"] = std::move(cands);
    return doc;
}

inline InverseProblem problem_from_json(const json& doc) {
    try {
        if (!doc.is_object()) throw ProblemError("problem document must be a JSON object");
        for (const char* key : {"n", "d", "forward_map", "noise_std", "prior_mean",
                                "prior_factor", "candidates"})
            if (!doc.contains(key))
                throw ProblemError(std::string("problem document is missing \"") + key + "\"");
        const auto n = doc["n"].get<Eigen::Index>();
        const auto d = doc["d"].get<Eigen::Index>();
        if (n < 1 || d < 1) throw ProblemError("n and d must be positive");

        InverseProblem p;
        p.forward_map = detail::matrix_from_json(doc["forward_map"], d, n, "forward_map");
        p.noise_std = detail::vector_from_json(doc["noise_std"], d, "noise_std");
        p.prior_mean = detail::vector_from_json(doc["prior_mean"], n, "prior_mean");
        p.prior_factor = detail::matrix_from_json(doc["prior_factor"], n, n, "prior_factor");

        const json& cands = doc["candidates"];
        if (!cands.is_array() || static_cast<Eigen::Index>(cands.size()) != d)
            throw ProblemError("candidates must be an array of d entries");
        p.candidates.reserve(static_cast<std::size_t>(d));
        for (Eigen::Index i = 0; i < d; ++i) {
            const json& entry = cands[static_cast<std::size_t>(i)];
            Candidate c;
            c.label = entry.is_object() && entry.contains("label")
                          ? entry["label"].get<std::string>()
                          : "s" + std::to_string(i);
            if (entry.is_object() && entry.contains("coord") && !entry["coord"].is_null())
                c.coord = entry["coord"].get<double>();
            p.candidates.push_back(std::move(c));
        }
        validate_problem(p);
        return p;
    } catch (const ProblemError&) {
        throw;
    } catch (const Error& e) {
        throw ProblemError(std::string("invalid problem document: ") + e.what());
    } catch (const json::exception& e) {
        throw ProblemError(std::string("invalid problem document: ") + e.what());
    }
}

inline void save_problem(const InverseProblem& problem, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ProblemError("cannot open " + path + " for writing");
    out << problem_to_json(problem).dump(2) << "\n";
}

inline InverseProblem load_problem(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProblemError("cannot open problem file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ProblemError("cannot parse " + path + ": " + e.what());
    }
    return problem_from_json(doc);
}

inline GeneratorSpec spec_from_json(const json& doc) {
    if (!doc.is_object()) throw ProblemError("generator spec must be a JSON object");
    GeneratorSpec spec;
    try {
        if (!doc.contains("kind")) throw ProblemError("generator spec is missing \"kind\"");
        const auto kind = doc["kind"].get<std::string>();
        if (kind == "heat1d")
            spec.kind = ProblemKind::heat1d;
        else if (kind == "synthetic")
            spec.kind = ProblemKind::synthetic;
        else
            throw ProblemError("unknown problem kind \"" + kind + "\"");
        if (doc.contains("n")) spec.n = doc["n"].get<Eigen::Index>();
        if (doc.contains("d")) spec.d = doc["d"].get<Eigen::Index>();
        if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("kappa")) spec.kappa = doc["kappa"].get<double>();
        if (doc.contains("final_time")) spec.final_time = doc["final_time"].get<double>();
        if (doc.contains("prior_shift")) spec.prior_shift = doc["prior_shift"].get<double>();
        if (doc.contains("prior_scale")) spec.prior_scale = doc["prior_scale"].get<double>();
        if (doc.contains("noise_std")) spec.noise_std = doc["noise_std"].get<double>();
        if (doc.contains("decay")) spec.decay = doc["decay"].get<double>();
    } catch (const ProblemError&) {
        throw;
    } catch (const json::exception& e) {
        throw ProblemError(std::string("invalid generator spec: ") + e.what());
    }
    return spec;
}

inline GeneratorSpec load_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProblemError("cannot open spec file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ProblemError("cannot parse " + path + ": " + e.what());
    }
    return spec_from_json(doc);
}

inline json result_to_json(const PlacementResult& result) {
    json doc;
    doc["algorithm"] = result.algorithm;
    json selected = json::array();
    for (Eigen::Index v : result.selected) selected.push_back(v);
    doc["selected"] = std::move(selected);
    doc["step_gains"] = result.step_gains;
    doc["phi_trace"] = result.phi_trace;
    doc["gain_evals"] = result.gain_evals;
    doc["wall_time"] = result.wall_time;
    return doc;
}

/// Plot-ready per-step trace: one row per selection step.
inline void write_csv(const PlacementResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ProblemError("cannot open " + path + " for writing");
    out << "step,candidate,gain,phi,cumulative_gain_evals\n";
    for (std::size_t j = 0; j < result.selected.size(); ++j) {
        out << (j + 1) << ',' << result.selected[j] << ',' << format_double(result.step_gains[j])
            << ',' << format_double(result.phi_trace[j + 1]) << ',' << result.eval_trace[j]
            << "\n";
    }
}

} // namespace oed
