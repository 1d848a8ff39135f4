#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "backward.hpp"
#include "brownian.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "paths.hpp"
#include "time_grid.hpp"

namespace xvabsde {

struct SpectralDecomposition {
    VectorXd eigenvalues;               // descending
    std::vector<MatrixXd> projections;  // rank-1, symmetric, idempotent
};

struct FactorProjection {
    std::size_t retained = 0;  // F
    MatrixXd p;                // n x n, P = U U^T
    MatrixXd u;                // n x F, U^T U = I_F
    double tolerance = 0.0;    // discarded-eigenvalue budget, when derived from one
    double dispersion = 0.0;   // mean Frobenius distance of the samples to P
};

// F = n: nothing discarded; useful as the reference point of factor sweeps.
inline FactorProjection identity_projection(std::size_t n) {
    FactorProjection out;
    out.retained = n;
    out.p = MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    out.u = out.p;
    return out;
}

struct ReductionDiagnostics {
    std::vector<double> delta;  // Delta(t) per grid node
    double err_s = 0.0;         // sup_t E[|S~ - S|^2]^{1/2}
    double err_y = 0.0;         // sup_t (e^{beta t} E[(Y~ - Y)^2])^{1/2}
    double err_z = 0.0;         // (int e^{beta u} E[|U Z~ - Z|^2] du)^{1/2}
    double residual_z = 0.0;    // int e^{beta u} E[Z^T (I-P) Z] du
    double beta = 1.0;
};

namespace detail {

// deterministic sign convention for eigenvectors: first component of
// nonneglible size made positive (resolves the +-v ambiguity and
// eigenvalue-tie ordering across platforms)
inline void fix_eigvec_sign(Eigen::Ref<VectorXd> v) {
    for (Eigen::Index a = 0; a < v.size(); ++a) {
        if (std::abs(v(a)) > 1e-14) {
            if (v(a) < 0.0) v = -v;
            return;
        }
    }
}

}  // namespace detail

inline SpectralDecomposition spectral_decompose(const MatrixXd& cov) {
    const Eigen::Index n = cov.rows();
    if (cov.cols() != n) {
        throw std::invalid_argument("spectral_decompose: matrix must be square");
    }
    MatrixXd sym = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("spectral_decompose: eigensolver failed");
    }
    SpectralDecomposition out;
    out.eigenvalues.resize(n);
    out.projections.reserve(static_cast<std::size_t>(n));
    // SelfAdjointEigenSolver returns ascending order; emit descending
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index src = n - 1 - j;
        const double lambda = es.eigenvalues()(src);
        if (lambda < -1e-8) {
            throw std::invalid_argument("spectral_decompose: matrix is not positive "
                                        "semidefinite (eigenvalue " +
                                        std::to_string(lambda) + ")");
        }
        out.eigenvalues(j) = lambda;
        VectorXd v = es.eigenvectors().col(src);
        detail::fix_eigvec_sign(v);
        out.projections.push_back(v * v.transpose());
    }
    return out;
}

// Arithmetic mean of sampled rank-F truncation projections, snapped back to
// the nearest rank-F projection through its own eigenbasis.
inline FactorProjection average_projection(const std::vector<MatrixXd>& samples,
                                           std::size_t retained) {
    if (samples.empty()) {
        throw std::invalid_argument("average_projection: no samples");
    }
    const Eigen::Index n = samples.front().rows();
    if (retained >= static_cast<std::size_t>(n)) {
        throw std::invalid_argument(
            "average_projection: F must be smaller than the dimension (nothing to reduce)");
    }
    MatrixXd mean = MatrixXd::Zero(n, n);
    for (const MatrixXd& s : samples) {
        if (s.rows() != n || s.cols() != n) {
            throw std::invalid_argument("average_projection: inconsistent sample shapes");
        }
        mean += s;
    }
    mean /= static_cast<double>(samples.size());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (mean + mean.transpose()));
    FactorProjection out;
    out.retained = retained;
    out.u.resize(n, static_cast<Eigen::Index>(retained));
    for (std::size_t j = 0; j < retained; ++j) {
        VectorXd v = es.eigenvectors().col(n - 1 - static_cast<Eigen::Index>(j));
        detail::fix_eigvec_sign(v);
        out.u.col(static_cast<Eigen::Index>(j)) = v;
    }
    out.p = out.u * out.u.transpose();
    for (const MatrixXd& s : samples) out.dispersion += (s - out.p).norm();
    out.dispersion /= static_cast<double>(samples.size());
    return out;
}

// Truncation projection of a single covariance matrix (the
// state-independent special case of average_projection).
inline FactorProjection truncation_projection(const MatrixXd& cov, std::size_t retained) {
    return average_projection({cov}, retained);
}

// Delta(t)^2 = int_0^t E[ tr(sigma^T sigma - P sigma^T sigma P) ] du,
// trapezoidal in time, MC over the ensemble's paths.
inline std::vector<double> discrepancy_delta(const PathEnsemble& ens, const MatrixXd& p) {
    const std::size_t n = ens.dimension();
    const std::size_t m = ens.grid.step_count;
    const std::size_t N = ens.path_count();
    if (p.rows() != static_cast<Eigen::Index>(n) || p.cols() != static_cast<Eigen::Index>(n)) {
        throw std::invalid_argument("discrepancy_delta: projection shape mismatch");
    }
    std::vector<double> trace_mean(m + 1, 0.0);
    {
        std::vector<double> s(n);
        MatrixXd sigma(n, n), cov(n, n);
        for (std::size_t i = 0; i <= m; ++i) {
            double acc = 0.0;
            for (std::size_t q = 0; q < N; ++q) {
                ens.state_at(q, i, s);
                ens.model.diffusion(ens.grid.nodes[i], s, sigma);
                cov = sigma.transpose() * sigma;
                acc += (cov - p * cov * p).trace();
            }
            trace_mean[i] = acc / static_cast<double>(N);
        }
    }
    std::vector<double> delta(m + 1, 0.0);
    double integral = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        integral += 0.5 * ens.grid.steps[i] * (trace_mean[i] + trace_mean[i + 1]);
        delta[i + 1] = std::sqrt(std::max(integral, 0.0));
    }
    return delta;
}

// W~ = U^T W: the reduced driving batch coupled to the full one (P W = U W~
// holds exactly). Keeps the parent's seed so coupled runs can be verified.
inline BrownianBatch reduce_brownian(const BrownianBatch& batch, const TimeGrid& grid,
                                     const MatrixXd& u) {
    const std::size_t n = batch.dimension;
    const std::size_t f = static_cast<std::size_t>(u.cols());
    if (u.rows() != static_cast<Eigen::Index>(n)) {
        throw std::invalid_argument("reduce_brownian: factor matrix shape mismatch");
    }
    const std::size_t m = grid.step_count;
    const std::size_t N = batch.path_count;
    BrownianBatch out;
    out.path_count = N;
    out.dimension = f;
    out.seed = batch.seed;
    out.increments.resize(N, m * f);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t b = 0; b < f; ++b) {
            out.increments.col(i * f + b).setZero();
            for (std::size_t a = 0; a < n; ++a) {
                out.increments.col(i * f + b) += u(a, b) * batch.increments.col(i * n + a);
            }
        }
    }
    finalize_brownian(out, grid);
    return out;
}

// Euler scheme for dS~ = mu dt + sigma(t,S~) U dW~ on the coupled reduced
// batch. The returned ensemble keeps the full model (states stay
// n-dimensional) while the driving batch carries F factors.
inline PathEnsemble simulate_reduced(const AssetModel& model, const TimeGrid& grid,
                                     const BrownianBatch& full_batch,
                                     const FactorProjection& proj) {
    const std::size_t n = model.dimension;
    if (full_batch.dimension != n) {
        throw std::invalid_argument("simulate_reduced: batch dimension does not match model");
    }
    if (proj.u.rows() != static_cast<Eigen::Index>(n)) {
        throw std::invalid_argument("simulate_reduced: factor matrix shape mismatch");
    }
    const std::size_t f = static_cast<std::size_t>(proj.u.cols());
    const std::size_t m = grid.step_count;
    const std::size_t N = full_batch.path_count;
    PathEnsemble ens;
    ens.grid = grid;
    ens.batch = reduce_brownian(full_batch, grid, proj.u);
    ens.model = model;
    ens.states.resize(N, (m + 1) * n);
    for (std::size_t a = 0; a < n; ++a) ens.states.col(a) = model.s0(a);
    struct Ctx {
        std::vector<double> s, mu;
        MatrixXd sigma, sigma_u;
    };
    const BrownianBatch& batch = ens.batch;
    parallel_paths(
        N,
        [n, f] {
            return Ctx{std::vector<double>(n), std::vector<double>(n), MatrixXd(n, n),
                       MatrixXd(n, f)};
        },
        [&](std::size_t p, Ctx& c) {
            for (std::size_t a = 0; a < n; ++a) c.s[a] = model.s0(a);
            for (std::size_t i = 0; i < m; ++i) {
                const double t = grid.nodes[i];
                const double dt = grid.steps[i];
                model.drift(t, c.s, c.mu);
                model.diffusion(t, c.s, c.sigma);
                c.sigma_u = c.sigma * proj.u;
                for (std::size_t a = 0; a < n; ++a) {
                    double diff = 0.0;
                    for (std::size_t b = 0; b < f; ++b) {
                        diff += c.sigma_u(a, b) * batch.increments(p, i * f + b);
                    }
                    c.s[a] += c.mu[a] * dt + diff;
                }
                detail::check_finite_state(c.s.data(), n, p, i + 1, "simulate_reduced");
                for (std::size_t a = 0; a < n; ++a) ens.states(p, (i + 1) * n + a) = c.s[a];
            }
        });
    return ens;
}

// Driver of the reduced backward equation: the solver's zeta lives in the
// factor coordinates; the model driver sees Z~ = U zeta.
inline DriverSpec reduced_factor_driver(const DriverSpec& full, const MatrixXd& u) {
    DriverSpec out;
    const std::size_t n = static_cast<std::size_t>(u.rows());
    const std::size_t f = static_cast<std::size_t>(u.cols());
    auto inner = full.f;
    out.f = [inner, u, n, f](std::size_t p, std::size_t i, double t,
                             std::span<const double> s, double y,
                             std::span<const double> zeta) {
        std::vector<double> z(n, 0.0);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < f; ++b) z[a] += u(a, b) * zeta[b];
        }
        return inner(p, i, t, s, y, z);
    };
    return out;
}

// MC estimates of the discrepancy norms between a coupled full/reduced run
// pair. z arrays follow the solver layout (node i at columns [i*d, (i+1)*d)
// with d the respective driving dimension); the reduced Z is lifted back by
// U before differencing.
inline ReductionDiagnostics reduction_error_report(const PathEnsemble& full,
                                                   const ArrayXXd& y_full,
                                                   const ArrayXXd& z_full,
                                                   const PathEnsemble& reduced,
                                                   const ArrayXXd& y_red,
                                                   const ArrayXXd& z_red,
                                                   const FactorProjection& proj,
                                                   double beta = 1.0) {
    const std::size_t n = full.dimension();
    const std::size_t m = full.grid.step_count;
    const std::size_t N = full.path_count();
    const std::size_t f = static_cast<std::size_t>(proj.u.cols());
    if (reduced.path_count() != N || reduced.grid.step_count != m ||
        reduced.dimension() != n) {
        throw std::invalid_argument("reduction_error_report: run shapes do not match");
    }
    if (reduced.batch.seed != full.batch.seed) {
        throw ContractViolation(
            "reduction_error_report: runs are not coupled (different batch seeds)");
    }
    ReductionDiagnostics diag;
    diag.beta = beta;
    diag.delta = discrepancy_delta(full, proj.p);

    for (std::size_t i = 0; i <= m; ++i) {
        double acc = 0.0;
        for (std::size_t p = 0; p < N; ++p) {
            for (std::size_t a = 0; a < n; ++a) {
                const double d = reduced.s(p, i, a) - full.s(p, i, a);
                acc += d * d;
            }
        }
        diag.err_s = std::max(diag.err_s, std::sqrt(acc / static_cast<double>(N)));
    }
    if (y_full.size() > 0) {
        for (std::size_t i = 0; i <= m; ++i) {
            const double w = std::exp(beta * full.grid.nodes[i]);
            const double acc = (y_red.col(i) - y_full.col(i)).square().mean();
            diag.err_y = std::max(diag.err_y, std::sqrt(w * acc));
        }
    }
    if (z_full.size() > 0) {
        double int_z = 0.0, int_res = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double w = std::exp(beta * full.grid.nodes[i]);
            double acc = 0.0, res = 0.0;
            VectorXd zf(static_cast<Eigen::Index>(n)), zr(static_cast<Eigen::Index>(n));
            for (std::size_t p = 0; p < N; ++p) {
                for (std::size_t a = 0; a < n; ++a) zf(static_cast<Eigen::Index>(a)) = z_full(p, i * n + a);
                zr.setZero();
                for (std::size_t b = 0; b < f; ++b) {
                    zr += proj.u.col(static_cast<Eigen::Index>(b)) * z_red(p, i * f + b);
                }
                acc += (zr - zf).squaredNorm();
                res += zf.dot((MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                  static_cast<Eigen::Index>(n)) -
                               proj.p) *
                              zf);
            }
            int_z += w * acc / static_cast<double>(N) * full.grid.steps[i];
            int_res += w * res / static_cast<double>(N) * full.grid.steps[i];
        }
        diag.err_z = std::sqrt(int_z);
        diag.residual_z = int_res;
    }
    return diag;
}

}  // namespace xvabsde
