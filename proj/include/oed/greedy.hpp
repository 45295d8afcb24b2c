#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "oed/eig.hpp"
#include "oed/errors.hpp"
#include "oed/problem.hpp"
#include "oed/rng.hpp"

namespace oed {

/// Greedy must reach at least (1 - 1/e) of the optimum; this slack absorbs
/// floating-point rounding in the ratio itself.
inline constexpr double kGuaranteeTol = 1e-12;

/// Which marginal-gain formula the selection loop evaluates. The
/// measurement path works entirely on the Gram matrix; the parameter path
/// solves against the n x n curvature and serves as a reference.
enum class GainPath { measurement, parameter };

/// Output of one selection algorithm run.
///
/// Invariants: phi_trace[0] = 0, phi_trace[j] = phi_trace[j-1] +
/// step_gains[j-1] exactly (the trace is built from the gains), phi_trace
/// is nondecreasing, and selected.size() equals the requested budget.
struct PlacementResult {
    std::vector<Eigen::Index> selected;   // in selection order
    std::vector<double> step_gains;       // one per step
    std::vector<double> phi_trace;        // length selected.size() + 1
    std::uint64_t gain_evals = 0;
    std::string algorithm;
    double wall_time = 0.0;               // seconds

    // cumulative gain_evals after each step, for trace files
    std::vector<std::uint64_t> eval_trace;
};

/// Max-heap of cached marginal gains for lazy greedy. Entries order by
/// cached gain descending, ties by candidate index ascending. Submodularity
/// makes every cached value an upper bound on the candidate's current gain,
/// so an entry refreshed at the current step that reaches the top is the
/// true argmax.
class GainQueue {
public:
    struct Entry {
        Eigen::Index index;
        double gain;                // cached upper bound
        Eigen::Index refreshed_at;  // step at which gain was evaluated
    };

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    void push(const Entry& entry) { heap_.push(entry); }
    const Entry& top() const { return heap_.top(); }

    Entry pop() {
        Entry entry = heap_.top();
        heap_.pop();
        return entry;
    }

private:
    struct Order {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.gain != b.gain) return a.gain < b.gain;
            return a.index > b.index;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, Order> heap_;
};

namespace detail {

inline void check_budget(Eigen::Index d, Eigen::Index k) {
    if (k < 1 || k > d)
        throw BudgetOutOfRange("budget " + std::to_string(k) + " outside [1, " +
                               std::to_string(d) + "]");
}

// Evaluates marginal gains along the configured path. For the parameter
// path the n x n curvature factor is refreshed once per accepted candidate.
class GainEvaluator {
public:
    GainEvaluator(const PreparedDesign& prepared, GainPath path)
        : prepared_(prepared), path_(path) {
        if (path_ == GainPath::parameter) factor_.emplace(prepared_);
    }

    double operator()(const SelectionState& state, Eigen::Index v) const {
        return path_ == GainPath::measurement ? marginal_gain_meas(prepared_.gram, state, v)
                                              : factor_->gain(prepared_, v);
    }

    void on_select(const SelectionState& state) {
        if (path_ == GainPath::parameter) factor_->refresh(prepared_, state.selected);
    }

private:
    const PreparedDesign& prepared_;
    GainPath path_;
    std::optional<ParamFactor> factor_;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Appends the accepted candidate to the result so that
// phi_trace[j] = phi_trace[j-1] + step_gains[j-1] holds bitwise.
inline void record_step(PlacementResult& res, const SelectionState& state) {
    const double gain = state.phi - res.phi_trace.back();
    res.selected.push_back(state.selected.back());
    res.step_gains.push_back(gain);
    res.phi_trace.push_back(res.phi_trace.back() + gain);
    res.eval_trace.push_back(res.gain_evals);
}

inline double binomial(Eigen::Index n, Eigen::Index k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (Eigen::Index i = 1; i <= k; ++i)
        r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

} // namespace detail

/// Standard greedy: at each step evaluates every unselected candidate and
/// takes the best, ties to the smallest index. Exactly
/// sum_{l=1}^{k} (d - l + 1) gain evaluations.
inline PlacementResult greedy_select(const PreparedDesign& prepared, Eigen::Index k,
                                     GainPath path = GainPath::measurement) {
    const detail::Stopwatch clock;
    const Eigen::Index d = prepared.n_sensors();
    detail::check_budget(d, k);

    detail::GainEvaluator evaluate(prepared, path);
    SelectionState state;
    PlacementResult res;
    res.algorithm = "greedy";
    res.phi_trace.push_back(0.0);
    std::vector<bool> used(static_cast<std::size_t>(d), false);

    for (Eigen::Index step = 0; step < k; ++step) {
        Eigen::Index best = -1;
        double best_gain = -std::numeric_limits<double>::infinity();
        for (Eigen::Index v = 0; v < d; ++v) {
            if (used[static_cast<std::size_t>(v)]) continue;
            const double gain = evaluate(state, v);
            ++res.gain_evals;
            if (gain > best_gain) {
                best_gain = gain;
                best = v;
            }
        }
        state = extend_state(prepared.gram, state, best);
        used[static_cast<std::size_t>(best)] = true;
        evaluate.on_select(state);
        detail::record_step(res, state);
    }
    res.wall_time = clock.seconds();
    return res;
}

/// Lazy greedy: keeps stale gains as upper bounds in a GainQueue and
/// re-evaluates only the current top until a value refreshed at this step
/// surfaces. Returns the same index sequence as greedy_select and never
/// evaluates more gains.
inline PlacementResult lazy_greedy_select(const PreparedDesign& prepared, Eigen::Index k,
                                          GainPath path = GainPath::measurement) {
    const detail::Stopwatch clock;
    const Eigen::Index d = prepared.n_sensors();
    detail::check_budget(d, k);

    detail::GainEvaluator evaluate(prepared, path);
    SelectionState state;
    PlacementResult res;
    res.algorithm = "lazy";
    res.phi_trace.push_back(0.0);

    GainQueue queue;
    for (Eigen::Index v = 0; v < d; ++v) {
        queue.push({v, evaluate(state, v), 0});
        ++res.gain_evals;
    }

    for (Eigen::Index step = 0; step < k; ++step) {
        while (true) {
            GainQueue::Entry top = queue.pop();
            if (top.refreshed_at == step) {
                state = extend_state(prepared.gram, state, top.index);
                evaluate.on_select(state);
                detail::record_step(res, state);
                break;
            }
            top.gain = evaluate(state, top.index);
            top.refreshed_at = step;
            ++res.gain_evals;
            queue.push(top);
        }
    }
    res.wall_time = clock.seconds();
    return res;
}

/// Scores every subset of size k and returns a global maximizer, ties to
/// the lexicographically smallest index set. Refuses to enumerate more
/// than `cap` subsets.
inline PlacementResult exhaustive_search(const PreparedDesign& prepared, Eigen::Index k,
                                         double cap = 1e6) {
    const detail::Stopwatch clock;
    const Eigen::Index d = prepared.n_sensors();
    detail::check_budget(d, k);
    const double count = detail::binomial(d, k);
    if (count > cap) {
        char msg[256];
        std::snprintf(msg, sizeof(msg),
                      "enumerating %.3g subsets of size %lld from %lld candidates exceeds the "
                      "cap of %.3g; already at 100 candidates and budget 20 this costs about "
                      "5e20 evaluations",
                      count, static_cast<long long>(k), static_cast<long long>(d), cap);
        throw EnumerationTooLarge(msg);
    }

    std::vector<Eigen::Index> comb(static_cast<std::size_t>(k));
    std::iota(comb.begin(), comb.end(), Eigen::Index{0});
    std::vector<Eigen::Index> best;
    double best_phi = -std::numeric_limits<double>::infinity();
    std::uint64_t evals = 0;

    while (true) {
        const double phi = eig_value(prepared.gram, comb);
        ++evals;
        if (phi > best_phi) {
            best_phi = phi;
            best = comb;
        }
        // advance to the next combination in lexicographic order
        Eigen::Index pos = k - 1;
        while (pos >= 0 && comb[static_cast<std::size_t>(pos)] == d - k + pos) --pos;
        if (pos < 0) break;
        ++comb[static_cast<std::size_t>(pos)];
        for (Eigen::Index j = pos + 1; j < k; ++j)
            comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
    }

    PlacementResult res;
    res.algorithm = "exhaustive";
    res.gain_evals = evals;
    res.phi_trace.push_back(0.0);
    SelectionState state;
    for (Eigen::Index v : best) {
        state = extend_state(prepared.gram, state, v);
        detail::record_step(res, state);
    }
    res.wall_time = clock.seconds();
    return res;
}

/// Greedy value versus the exhaustive optimum on one instance.
struct GuaranteeReport {
    PlacementResult greedy;
    PlacementResult exhaustive;
    double ratio = 1.0;  // greedy phi / optimal phi; 1 when the optimum is 0
    double bound = 0.0;  // 1 - 1/e
};

/// Runs both greedy and exhaustive search and checks the classic
/// approximation guarantee. A ratio below 1 - 1/e (beyond rounding slack)
/// is impossible for a monotone submodular objective, so it throws.
inline GuaranteeReport check_guarantee(const PreparedDesign& prepared, Eigen::Index k,
                                       double cap = 1e6) {
    GuaranteeReport report;
    report.greedy = greedy_select(prepared, k);
    report.exhaustive = exhaustive_search(prepared, k, cap);
    report.bound = 1.0 - std::exp(-1.0);
    const double optimal = report.exhaustive.phi_trace.back();
    const double achieved = report.greedy.phi_trace.back();
    report.ratio = optimal == 0.0 ? 1.0 : achieved / optimal;
    if (report.ratio < report.bound - kGuaranteeTol)
        throw GuaranteeViolation("greedy achieved " + std::to_string(report.ratio) +
                                 " of the optimum, below the 1 - 1/e guarantee; this indicates "
                                 "a defective gain or objective implementation");
    return report;
}

/// Stochastic greedy: each step draws ceil((d/k) ln(1/epsilon)) distinct
/// unselected candidates uniformly and takes the best of the sample, ties
/// to the smallest index. Deterministic for a fixed seed.
inline PlacementResult stochastic_greedy_select(const PreparedDesign& prepared, Eigen::Index k,
                                                double epsilon, std::uint64_t seed,
                                                GainPath path = GainPath::measurement) {
    const detail::Stopwatch clock;
    const Eigen::Index d = prepared.n_sensors();
    detail::check_budget(d, k);
    if (!(epsilon > 0.0) || !(epsilon < 1.0))
        throw InvalidSpec("stochastic greedy requires epsilon in (0, 1)");

    const double raw = std::ceil(static_cast<double>(d) / static_cast<double>(k) *
                                 std::log(1.0 / epsilon));
    const Eigen::Index sample_size = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(raw));

    detail::GainEvaluator evaluate(prepared, path);
    SelectionState state;
    PlacementResult res;
    res.algorithm = "stochastic";
    res.phi_trace.push_back(0.0);

    Rng rng(seed);
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(d));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});

    for (Eigen::Index step = 0; step < k; ++step) {
        const auto remaining = static_cast<Eigen::Index>(pool.size());
        const Eigen::Index m = std::min(sample_size, remaining);
        // partial Fisher-Yates: pool[0..m) becomes a uniform m-subset
        for (Eigen::Index j = 0; j < m; ++j) {
            const auto r = j + static_cast<Eigen::Index>(
                                   rng.uniform_index(static_cast<std::uint64_t>(remaining - j)));
            std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(r)]);
        }
        std::size_t best_pos = 0;
        Eigen::Index best = -1;
        double best_gain = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < m; ++j) {
            const Eigen::Index v = pool[static_cast<std::size_t>(j)];
            const double gain = evaluate(state, v);
            ++res.gain_evals;
            if (gain > best_gain || (gain == best_gain && v < best)) {
                best_gain = gain;
                best = v;
                best_pos = static_cast<std::size_t>(j);
            }
        }
        state = extend_state(prepared.gram, state, best);
        evaluate.on_select(state);
        detail::record_step(res, state);
        pool[best_pos] = pool.back();
        pool.pop_back();
    }
    res.wall_time = clock.seconds();
    return res;
}

} // namespace oed
