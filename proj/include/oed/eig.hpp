#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "oed/errors.hpp"
#include "oed/problem.hpp"

namespace oed {

/// Negative computed gains above this magnitude are rounding noise and are
/// clamped to zero; anything more negative signals a broken Gram matrix.
inline constexpr double kGainClampTol = 1e-10;

/// New Cholesky diagonal entries sit at or above 1 in exact arithmetic.
/// Values whose square falls below 1 - kDiagGuardTol abort the update.
inline constexpr double kDiagGuardTol = 1e-8;

/// Incremental representation of a selected sensor subset.
///
/// Invariants: chol is the lower Cholesky factor of I_k + G[S,S] in
/// selection order, its diagonal entries are >= 1 up to the numerical
/// guard, and phi = 2 * sum_j log(chol(j,j)) is the expected information
/// gain of S.
struct SelectionState {
    std::vector<Eigen::Index> selected;
    Matrix chol;     // k x k lower triangular
    double phi = 0.0;

    Eigen::Index size() const { return static_cast<Eigen::Index>(selected.size()); }
    bool contains(Eigen::Index v) const {
        return std::find(selected.begin(), selected.end(), v) != selected.end();
    }
};

namespace detail {

inline void check_candidate(const Matrix& gram, Eigen::Index v) {
    if (v < 0 || v >= gram.rows())
        throw IndexOutOfRange("candidate index " + std::to_string(v) +
                              " outside [0, " + std::to_string(gram.rows()) + ")");
}

inline void check_state(const Matrix& gram, const SelectionState& state) {
    if (state.chol.rows() != state.size() || state.chol.cols() != state.size())
        throw StaleState("selection state factor size does not match its index list");
    for (Eigen::Index v : state.selected) check_candidate(gram, v);
}

inline Vector gram_column(const Matrix& gram, const std::vector<Eigen::Index>& rows,
                          Eigen::Index v) {
    Vector g(static_cast<Eigen::Index>(rows.size()));
    for (Eigen::Index j = 0; j < g.size(); ++j) g[j] = gram(rows[static_cast<std::size_t>(j)], v);
    return g;
}

// Schur complement of candidate v against the current factor:
// G_vv - ||L^{-1} g||^2 with g = G[S, v]. Equals e^{gain} - 1.
inline double schur_complement(const Matrix& gram, const SelectionState& state,
                               Eigen::Index v) {
    double norm_sq = 0.0;
    if (state.size() > 0) {
        Vector w = detail::gram_column(gram, state.selected, v);
        state.chol.triangularView<Eigen::Lower>().solveInPlace(w);
        norm_sq = w.squaredNorm();
    }
    return gram(v, v) - norm_sq;
}

inline double clamp_gain(double schur, Eigen::Index v) {
    if (schur < 0.0) {
        const double raw = schur > -1.0 ? std::log1p(schur)
                                        : -std::numeric_limits<double>::infinity();
        if (raw >= -kGainClampTol) return 0.0;
        throw NumericalBreakdown("marginal gain " + std::to_string(raw) + " of candidate " +
                                 std::to_string(v) +
                                 " is negative beyond rounding tolerance");
    }
    return std::log1p(schur);
}

} // namespace detail

/// Expected information gain of a subset, computed from scratch:
/// log det(I + G[S,S]). The empty set scores 0.
inline double eig_value(const Matrix& gram, const std::vector<Eigen::Index>& subset) {
    const auto k = static_cast<Eigen::Index>(subset.size());
    if (k == 0) return 0.0;
    Matrix m = Matrix::Identity(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        detail::check_candidate(gram, subset[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < k; ++b) {
            if (b != a && subset[static_cast<std::size_t>(a)] == subset[static_cast<std::size_t>(b)])
                throw CandidateAlreadySelected("subset lists candidate " +
                                               std::to_string(subset[static_cast<std::size_t>(a)]) +
                                               " twice");
            m(a, b) += gram(subset[static_cast<std::size_t>(a)], subset[static_cast<std::size_t>(b)]);
        }
    }
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("I + G[S,S] failed its Cholesky factorization");
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline double eig_value(const PreparedDesign& prepared, const std::vector<Eigen::Index>& subset) {
    return eig_value(prepared.gram, subset);
}

/// Marginal gain of adding candidate v, evaluated in measurement space
/// from the Gram matrix alone: log(1 + G_vv - ||L^{-1} G[S,v]||^2).
/// Cost is one triangular solve, O(|S|^2).
inline double marginal_gain_meas(const Matrix& gram, const SelectionState& state,
                                 Eigen::Index v) {
    detail::check_state(gram, state);
    detail::check_candidate(gram, v);
    if (state.contains(v))
        throw CandidateAlreadySelected("candidate " + std::to_string(v) +
                                       " is already in the selection");
    return detail::clamp_gain(detail::schur_complement(gram, state, v), v);
}

inline double marginal_gain_meas(const PreparedDesign& prepared, const SelectionState& state,
                                 Eigen::Index v) {
    return marginal_gain_meas(prepared.gram, state, v);
}

/// Cached Cholesky factor of I_n + sum_{i in S} ft_i ft_i^T, the
/// parameter-space curvature. Refreshed once per accepted candidate;
/// each gain query is then a single triangular solve.
class ParamFactor {
public:
    explicit ParamFactor(const PreparedDesign& prepared) { refresh(prepared, {}); }

    void refresh(const PreparedDesign& prepared, const std::vector<Eigen::Index>& selected) {
        const Eigen::Index n = prepared.rows.cols();
        Matrix m = Matrix::Identity(n, n);
        for (Eigen::Index i : selected) {
            detail::check_candidate(prepared.gram, i);
            m.selfadjointView<Eigen::Lower>().rankUpdate(prepared.rows.row(i).transpose());
        }
        llt_.compute(m);
        if (llt_.info() != Eigen::Success)
            throw NotPositiveDefinite("I + H(S) failed its Cholesky factorization");
    }

    /// log(1 + <(I + H(S))^{-1} ft_v, ft_v>)
    double gain(const PreparedDesign& prepared, Eigen::Index v) const {
        detail::check_candidate(prepared.gram, v);
        Vector w = prepared.rows.row(v).transpose();
        llt_.matrixL().solveInPlace(w);
        return detail::clamp_gain(w.squaredNorm(), v);
    }

    const Eigen::LLT<Matrix>& factor() const { return llt_; }

private:
    Eigen::LLT<Matrix> llt_;
};

/// Marginal gain of candidate v evaluated in parameter space. Reference
/// path: rebuilds the n x n factor on every call, O(n^3). Agrees with
/// marginal_gain_meas to tight tolerance on well-conditioned problems.
inline double marginal_gain_param(const PreparedDesign& prepared,
                                  const std::vector<Eigen::Index>& selected,
                                  Eigen::Index v) {
    if (std::find(selected.begin(), selected.end(), v) != selected.end())
        throw CandidateAlreadySelected("candidate " + std::to_string(v) +
                                       " is already in the selection");
    ParamFactor factor(prepared);
    factor.refresh(prepared, selected);
    return factor.gain(prepared, v);
}

/// Appends candidate v to the selection via a bordered Cholesky update:
/// new row [w^T, delta] with w = L^{-1} G[S,v] and
/// delta = sqrt(1 + G_vv - ||w||^2). Cost O(|S|^2). phi advances by
/// exactly the accepted gain, so per-step gains telescope to phi.
inline SelectionState extend_state(const Matrix& gram, const SelectionState& state,
                                   Eigen::Index v) {
    detail::check_state(gram, state);
    detail::check_candidate(gram, v);
    if (state.contains(v))
        throw CandidateAlreadySelected("candidate " + std::to_string(v) +
                                       " is already in the selection");
    const Eigen::Index k = state.size();
    Vector w(k);
    if (k > 0) {
        w = detail::gram_column(gram, state.selected, v);
        state.chol.triangularView<Eigen::Lower>().solveInPlace(w);
    }
    const double schur_raw = gram(v, v) - w.squaredNorm();
    if (schur_raw < -kDiagGuardTol)
        throw NumericalBreakdown("bordered Cholesky diagonal for candidate " +
                                 std::to_string(v) + " has squared value " +
                                 std::to_string(1.0 + schur_raw) +
                                 "; the Gram matrix is numerically inconsistent");
    // Rounding noise just below zero is flushed so that phi matches the
    // clamped gain bitwise and the trace stays nondecreasing.
    const double schur = std::max(schur_raw, 0.0);

    SelectionState next;
    next.selected = state.selected;
    next.selected.push_back(v);
    next.chol = Matrix::Zero(k + 1, k + 1);
    next.chol.topLeftCorner(k, k) = state.chol;
    if (k > 0) next.chol.row(k).head(k) = w.transpose();
    next.chol(k, k) = std::sqrt(1.0 + schur);
    next.phi = state.phi + std::log1p(schur);
    return next;
}

inline SelectionState extend_state(const PreparedDesign& prepared, const SelectionState& state,
                                   Eigen::Index v) {
    return extend_state(prepared.gram, state, v);
}

/// Posterior covariance of the parameters after observing the selected
/// sensors: R (I + H(S))^{-1} R^T. Dense, O(n^3); meant for reporting and
/// verification rather than inner loops.
inline Matrix posterior_covariance(const InverseProblem& problem, const PreparedDesign& prepared,
                                   const std::vector<Eigen::Index>& selected) {
    ParamFactor factor(prepared);
    factor.refresh(prepared, selected);
    const Eigen::Index n = prepared.rows.cols();
    Matrix inv = factor.factor().solve(Matrix::Identity(n, n));
    return problem.prior_factor * inv * problem.prior_factor.transpose();
}

/// Rank-one posterior covariance downdate for appending sensor i to S.
///
/// With z_tilde = (I + H(S))^{-1} ft_i and u = R z_tilde, the updated
/// covariance is C_post(S) - u u^T / denom. trace_drop is the trace
/// reduction ||u||^2 / denom, always >= 0.
struct PosteriorUpdate {
    Vector z_tilde;     // length n
    double denom = 1.0; // 1 + <ft_i, z_tilde>
    double trace_drop = 0.0;
};

inline PosteriorUpdate posterior_update(const InverseProblem& problem,
                                        const PreparedDesign& prepared,
                                        const std::vector<Eigen::Index>& selected,
                                        Eigen::Index i) {
    detail::check_candidate(prepared.gram, i);
    if (std::find(selected.begin(), selected.end(), i) != selected.end())
        throw CandidateAlreadySelected("candidate " + std::to_string(i) +
                                       " is already in the selection");
    ParamFactor factor(prepared);
    factor.refresh(prepared, selected);
    const Vector f = prepared.rows.row(i).transpose();

    PosteriorUpdate upd;
    upd.z_tilde = factor.factor().solve(f);
    upd.denom = 1.0 + f.dot(upd.z_tilde);
    upd.trace_drop = (problem.prior_factor * upd.z_tilde).squaredNorm() / upd.denom;
    return upd;
}

/// Posterior (MAP) mean given observations y at the selected sensors.
/// y must have one entry per candidate sensor; only selected entries are
/// read. m_map = m_pr + R (I + H(S))^{-1} sum_s ft_s (y_s - (F m_pr)_s) / sigma_s.
inline Vector posterior_mean(const InverseProblem& problem, const PreparedDesign& prepared,
                             const std::vector<Eigen::Index>& selected, const Vector& y) {
    if (y.size() != problem.n_sensors())
        throw DimensionMismatch("observation vector length " + std::to_string(y.size()) +
                                " does not match sensor count " +
                                std::to_string(problem.n_sensors()));
    const Vector predicted = problem.forward_map * problem.prior_mean;
    Vector rhs = Vector::Zero(prepared.rows.cols());
    for (Eigen::Index s : selected) {
        detail::check_candidate(prepared.gram, s);
        rhs += prepared.rows.row(s).transpose() * ((y[s] - predicted[s]) / problem.noise_std[s]);
    }
    ParamFactor factor(prepared);
    factor.refresh(prepared, selected);
    return problem.prior_mean + problem.prior_factor * factor.factor().solve(rhs);
}

} // namespace oed
