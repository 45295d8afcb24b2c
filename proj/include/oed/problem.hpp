#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "oed/errors.hpp"
#include "oed/rng.hpp"

namespace oed {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One candidate sensor: a display label and, when it has a physical
/// interpretation, a spatial coordinate.
struct Candidate {
    std::string label;
    std::optional<double> coord;
};

/// Discretized linear Gaussian inverse problem.
///
/// Data model: y = F m + eta with eta ~ N(0, diag(sigma^2)) and
/// prior m ~ N(prior_mean, C_pr), C_pr = R R^T. Row i of the forward map
/// is candidate sensor i.
struct InverseProblem {
    Matrix forward_map;            // d x n
    Vector noise_std;              // length d, all > 0
    Vector prior_mean;             // length n
    Matrix prior_factor;           // n x n, full rank; C_pr = R R^T
    std::vector<Candidate> candidates; // length d

    Eigen::Index n_sensors() const { return forward_map.rows(); }
    Eigen::Index n_params() const { return forward_map.cols(); }
};

/// Checks the structural invariants of an InverseProblem.
inline void validate_problem(const InverseProblem& p) {
    const Eigen::Index d = p.forward_map.rows();
    const Eigen::Index n = p.forward_map.cols();
    if (d < 1 || n < 1)
        throw DimensionMismatch("forward_map must be at least 1x1");
    if (p.noise_std.size() != d)
        throw DimensionMismatch("noise_std length " + std::to_string(p.noise_std.size()) +
                                " does not match sensor count " + std::to_string(d));
    if (p.prior_mean.size() != n)
        throw DimensionMismatch("prior_mean length " + std::to_string(p.prior_mean.size()) +
                                " does not match parameter dimension " + std::to_string(n));
    if (p.prior_factor.rows() != n || p.prior_factor.cols() != n)
        throw DimensionMismatch("prior_factor must be n x n");
    if (static_cast<Eigen::Index>(p.candidates.size()) != d)
        throw DimensionMismatch("candidate list length " + std::to_string(p.candidates.size()) +
                                " does not match sensor count " + std::to_string(d));
    for (Eigen::Index i = 0; i < d; ++i)
        if (!(p.noise_std[i] > 0.0))
            throw NonPositiveNoise("noise_std[" + std::to_string(i) + "] = " +
                                   std::to_string(p.noise_std[i]) + " must be positive");
}

/// Record of a low-rank compression applied to a PreparedDesign.
struct CompressionInfo {
    Eigen::Index retained_rank = 0;
    std::vector<double> discarded_singular_values;
    double discarded_mass = 0.0; // sum of squared discarded singular values
};

/// Noise-whitened, prior-preconditioned sensor rows and their Gram matrix.
///
/// Row i is ft_i = R^T F^T e_i / sigma_i. The Gram matrix G with
/// G_ij = <ft_i, ft_j> is a sufficient statistic for every information-gain
/// computation; all selection algorithms work from G alone.
struct PreparedDesign {
    Matrix rows;          // d x n, row i = ft_i
    Matrix gram;          // d x d symmetric PSD
    Vector row_norms_sq;  // diagonal of gram
    std::optional<CompressionInfo> provenance;

    Eigen::Index n_sensors() const { return rows.rows(); }
    Eigen::Index n_params() const { return rows.cols(); }
};

namespace detail {

// Pairwise dots keep gram exactly symmetric and its diagonal bitwise equal
// to the row norms.
inline void fill_gram(PreparedDesign& prep) {
    const Eigen::Index d = prep.rows.rows();
    prep.gram.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i; j < d; ++j) {
            const double v = prep.rows.row(i).dot(prep.rows.row(j));
            prep.gram(i, j) = v;
            prep.gram(j, i) = v;
        }
    }
    prep.row_norms_sq = prep.gram.diagonal();
}

} // namespace detail

/// Whitens and preconditions the sensor rows: ft_i = R^T F^T e_i / sigma_i.
inline PreparedDesign assemble_rows(const InverseProblem& problem) {
    validate_problem(problem);
    PreparedDesign prep;
    // rows = diag(1/sigma) * F * R, so row i is R^T (F^T e_i / sigma_i)
    prep.rows = problem.noise_std.cwiseInverse().asDiagonal() * problem.forward_map *
                problem.prior_factor;
    detail::fill_gram(prep);
    return prep;
}

/// Projects the rows onto the top-`rank` right singular subspace of the
/// stacked row matrix. The resulting Gram matrix is the closest PSD matrix
/// of rank `rank` to the original in this construction.
inline PreparedDesign low_rank_compress(const PreparedDesign& prepared, Eigen::Index rank) {
    const Eigen::Index d = prepared.rows.rows();
    const Eigen::Index n = prepared.rows.cols();
    const Eigen::Index full = std::min(d, n);
    if (rank < 1 || rank > full)
        throw RankTooLarge("rank " + std::to_string(rank) + " exceeds min(d, n) = " +
                           std::to_string(full));

    Eigen::JacobiSVD<Matrix> svd(prepared.rows, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();

    PreparedDesign out;
    const Matrix vr = svd.matrixV().leftCols(rank);
    out.rows = (prepared.rows * vr) * vr.transpose();
    detail::fill_gram(out);

    CompressionInfo info;
    info.retained_rank = rank;
    for (Eigen::Index j = rank; j < s.size(); ++j) {
        info.discarded_singular_values.push_back(s[j]);
        info.discarded_mass += s[j] * s[j];
    }
    out.provenance = std::move(info);
    return out;
}

/// Singular values of the stacked row matrix, largest first. Callers use
/// this to pick a compression rank.
inline Vector singular_spectrum(const PreparedDesign& prepared) {
    Eigen::JacobiSVD<Matrix> svd(prepared.rows);
    return svd.singularValues();
}

enum class ProblemKind { heat1d, synthetic };

/// Parameters for the built-in reproducible test problems.
///
/// heat1d: initial-condition inversion for the 1-D heat equation on (0,1)
/// with homogeneous Dirichlet boundary, observed at d sensor locations at
/// time T. synthetic: a forward map with prescribed singular-value decay.
struct GeneratorSpec {
    ProblemKind kind = ProblemKind::synthetic;
    Eigen::Index n = 16;
    Eigen::Index d = 8;
    std::uint64_t seed = 0;
    // heat1d
    double kappa = 0.05;       // diffusivity
    double final_time = 0.1;   // observation time T
    double prior_shift = 1.0;  // delta in (delta I - gamma L)^{-2}
    double prior_scale = 0.1;  // gamma
    double noise_std = 0.1;    // constant sensor noise
    // synthetic
    double decay = 0.5;        // singular values decay^j, j = 0..min(d,n)-1
};

namespace detail {

inline void validate_spec(const GeneratorSpec& spec) {
    if (spec.n < 1 || spec.d < 1)
        throw InvalidSpec("n and d must be at least 1");
    if (spec.kind == ProblemKind::heat1d) {
        if (spec.d > spec.n)
            throw InvalidSpec("heat1d requires d <= n (sensors are grid-point samples)");
        if (!(spec.kappa > 0.0) || !(spec.final_time > 0.0) || !(spec.prior_shift > 0.0) ||
            !(spec.prior_scale > 0.0) || !(spec.noise_std > 0.0))
            throw InvalidSpec("heat1d parameters must be strictly positive");
    } else {
        if (!(spec.decay > 0.0) || !(spec.decay < 1.0))
            throw InvalidSpec("synthetic decay rate must lie in (0, 1)");
    }
}

// Maps sorted physical targets in (0,1) to distinct interior grid indices,
// nearest first, probing outward on collision. Requires d <= n.
inline std::vector<Eigen::Index> snap_to_grid(const std::vector<double>& targets,
                                              Eigen::Index n) {
    const double h = 1.0 / static_cast<double>(n + 1);
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> indices;
    indices.reserve(targets.size());
    for (double t : targets) {
        auto i0 = static_cast<Eigen::Index>(std::llround(t * static_cast<double>(n + 1))) - 1;
        i0 = std::clamp<Eigen::Index>(i0, 0, n - 1);
        Eigen::Index pick = -1;
        if (!taken[static_cast<std::size_t>(i0)]) {
            pick = i0;
        } else {
            for (Eigen::Index off = 1; off < n && pick < 0; ++off) {
                const Eigen::Index lo = i0 - off, hi = i0 + off;
                const double dlo = lo >= 0 ? std::abs((lo + 1) * h - t) : std::numeric_limits<double>::infinity();
                const double dhi = hi < n ? std::abs((hi + 1) * h - t) : std::numeric_limits<double>::infinity();
                const Eigen::Index first = dlo <= dhi ? lo : hi;
                const Eigen::Index second = dlo <= dhi ? hi : lo;
                for (Eigen::Index c : {first, second}) {
                    if (c >= 0 && c < n && !taken[static_cast<std::size_t>(c)]) {
                        pick = c;
                        break;
                    }
                }
            }
        }
        taken[static_cast<std::size_t>(pick)] = true;
        indices.push_back(pick);
    }
    return indices;
}

inline InverseProblem generate_heat1d(const GeneratorSpec& spec) {
    const Eigen::Index n = spec.n, d = spec.d;
    const double h = 1.0 / static_cast<double>(n + 1);
    constexpr double pi = std::numbers::pi;

    // Spectral decomposition of the scaled Dirichlet Laplacian is known in
    // closed form: eigenvectors sin((j+1) pi x) sampled on the grid.
    Matrix w(n, n);
    Vector lam(n);
    const double scale = std::sqrt(2.0 * h);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double sj = std::sin((j + 1) * pi * h / 2.0);
        lam[j] = -4.0 * spec.kappa / (h * h) * sj * sj;
        for (Eigen::Index l = 0; l < n; ++l)
            w(l, j) = scale * std::sin((l + 1) * (j + 1) * pi * h);
    }

    Vector heat = (spec.final_time * lam).array().exp();
    Vector prior_inv = (spec.prior_shift - spec.prior_scale * lam.array()).inverse();

    const Matrix forward_full = w * heat.asDiagonal() * w.transpose();
    Matrix prior_factor = w * prior_inv.asDiagonal() * w.transpose();

    // Sensor targets are drawn in physical space so that a fixed seed pins
    // the same locations on every grid resolution.
    Rng rng(spec.seed);
    std::vector<double> targets(static_cast<std::size_t>(d));
    for (auto& t : targets) t = rng.uniform();
    std::sort(targets.begin(), targets.end());
    const std::vector<Eigen::Index> idx = snap_to_grid(targets, n);

    InverseProblem p;
    p.forward_map.resize(d, n);
    p.candidates.resize(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        p.forward_map.row(i) = forward_full.row(idx[static_cast<std::size_t>(i)]);
        char label[32];
        std::snprintf(label, sizeof(label), "s%02lld", static_cast<long long>(i));
        p.candidates[static_cast<std::size_t>(i)] = {
            label, (static_cast<double>(idx[static_cast<std::size_t>(i)]) + 1.0) * h};
    }
    p.noise_std = Vector::Constant(d, spec.noise_std);
    p.prior_mean = Vector::Zero(n);
    p.prior_factor = std::move(prior_factor);
    return p;
}

inline Matrix seeded_orthonormal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ() * Matrix::Identity(rows, cols);
}

inline InverseProblem generate_synthetic(const GeneratorSpec& spec) {
    const Eigen::Index n = spec.n, d = spec.d;
    const Eigen::Index m = std::min(d, n);
    Rng rng(spec.seed);
    const Matrix u = seeded_orthonormal(d, m, rng);
    const Matrix v = seeded_orthonormal(n, m, rng);
    Vector sv(m);
    for (Eigen::Index j = 0; j < m; ++j) sv[j] = std::pow(spec.decay, static_cast<double>(j));

    InverseProblem p;
    p.forward_map = u * sv.asDiagonal() * v.transpose();
    p.noise_std = Vector::Ones(d);
    p.prior_mean = Vector::Zero(n);
    p.prior_factor = Matrix::Identity(n, n);
    p.candidates.resize(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        char label[32];
        std::snprintf(label, sizeof(label), "c%02lld", static_cast<long long>(i));
        p.candidates[static_cast<std::size_t>(i)] = {label, std::nullopt};
    }
    return p;
}

} // namespace detail

/// Builds a reproducible test problem. Identical specs (seed included)
/// give bit-identical output.
inline InverseProblem generate_problem(const GeneratorSpec& spec) {
    detail::validate_spec(spec);
    return spec.kind == ProblemKind::heat1d ? detail::generate_heat1d(spec)
                                            : detail::generate_synthetic(spec);
}

} // namespace oed
