#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "backward.hpp"
#include "hermite.hpp"
#include "linalg.hpp"
#include "regression.hpp"
#include "stoch_exp.hpp"

namespace xvabsde {

using SourceFn = std::function<double(std::size_t, std::size_t)>;  // (path, node)

// Conditional tail functionals
//   H_i = q Omega_m + sum_{j >= i} trapezoid(A_j Omega_j)
// where Omega is a pathwise weight with Omega_0 = 1 (a discounted
// stochastic exponential); the conditional value at node i is
// E_i[H_i] / Omega_i.
//
// Regression-smoothed conditional profile: node i in (0, m) by Hermite fit
// on w_i, node 0 by the plain mean, node m exactly q.
inline ArrayXXd conditional_tail_profile(const TimeGrid& grid, const BrownianBatch& batch,
                                         const HermiteBasis& basis, const ArrayXXd& omega,
                                         const Eigen::ArrayXd& q, const SourceFn& source,
                                         double ridge = -1.0) {
    const std::size_t m = grid.step_count;
    const std::size_t N = batch.path_count;
    ArrayXXd profile(N, m + 1);
    Eigen::ArrayXd tail = q * omega.col(m).array();
    Eigen::ArrayXd integrand_next(N);
    if (source) {
        for (std::size_t p = 0; p < N; ++p) integrand_next(p) = source(p, m) * omega(p, m);
    }
    profile.col(m) = q;
    MatrixXd design;
    for (std::size_t ii = m; ii-- > 0;) {
        const std::size_t i = ii;
        if (source) {
            Eigen::ArrayXd integrand(N);
            for (std::size_t p = 0; p < N; ++p) integrand(p) = source(p, i) * omega(p, i);
            tail += 0.5 * grid.steps[i] * (integrand + integrand_next);
            integrand_next = integrand;
        }
        if (i == 0) {
            profile.col(0).setConstant(tail.mean());
        } else {
            detail::build_design(basis, batch, i, design);
            FitResult fit = ols_fit(design, tail.matrix(), ridge);
            VectorXd fitted = design * fit.coeffs;
            profile.col(i) = fitted.array() / omega.col(i).array();
        }
    }
    return profile;
}

// Raw per-path samples of the same tail functional, without regression
// smoothing: samples(p, i) = H_i(p) / Omega_i(p). The node-i column is an
// unbiased draw of the conditional value; its plain mean estimates the
// unconditional expectation at t_i.
inline ArrayXXd tail_value_samples(const TimeGrid& grid, const ArrayXXd& omega,
                                   const Eigen::ArrayXd& q, const SourceFn& source) {
    const std::size_t m = grid.step_count;
    const std::size_t N = static_cast<std::size_t>(omega.rows());
    ArrayXXd samples(N, m + 1);
    Eigen::ArrayXd tail = q * omega.col(m).array();
    Eigen::ArrayXd integrand_next(N);
    if (source) {
        for (std::size_t p = 0; p < N; ++p) integrand_next(p) = source(p, m) * omega(p, m);
    }
    for (std::size_t ii = m + 1; ii-- > 0;) {
        const std::size_t i = ii;
        if (source && i < m) {
            Eigen::ArrayXd integrand(N);
            for (std::size_t p = 0; p < N; ++p) integrand(p) = source(p, i) * omega(p, i);
            tail += 0.5 * grid.steps[i] * (integrand + integrand_next);
            integrand_next = integrand;
        }
        samples.col(i) = tail / omega.col(i).array();
    }
    return samples;
}

struct ProfileStats {
    std::vector<double> mean;
    std::vector<double> stderror;
};

inline ProfileStats stats_from_samples(const ArrayXXd& samples) {
    const std::size_t N = static_cast<std::size_t>(samples.rows());
    const std::size_t cols = static_cast<std::size_t>(samples.cols());
    ProfileStats stats;
    stats.mean.resize(cols);
    stats.stderror.resize(cols);
    for (std::size_t i = 0; i < cols; ++i) {
        const double mean = samples.col(i).mean();
        const double var = (samples.col(i) - mean).square().sum() / (N > 1 ? N - 1 : 1);
        stats.mean[i] = mean;
        stats.stderror[i] = std::sqrt(var / static_cast<double>(N));
    }
    return stats;
}

inline ProfileStats tail_profile_stats(const TimeGrid& grid, const ArrayXXd& omega,
                                       const Eigen::ArrayXd& q, const SourceFn& source) {
    return stats_from_samples(tail_value_samples(grid, omega, q, source));
}

// Closed form for a linear BSDE with driver A + B y + C . z: the weight is
// the stochastic exponential with integrands (B, C) and the profile is the
// conditional tail functional with terminal xi and source A.
inline ArrayXXd solve_linear_closed_form(const PathEnsemble& ens, const SourceFn& a_coeff,
                                         const std::function<double(std::size_t, std::size_t)>& b_coeff,
                                         const std::function<void(std::size_t, std::size_t,
                                                                  std::span<double>)>& c_coeff,
                                         const TerminalSpec& terminal, const HermiteBasis& basis,
                                         double ridge = -1.0) {
    const std::size_t N = ens.path_count();
    const std::size_t n = ens.dimension();
    StochasticExponentialSpec spec;
    spec.b = b_coeff;
    spec.c = c_coeff;
    ArrayXXd omega = stochastic_exponential(spec, ens.grid, ens.batch);
    Eigen::ArrayXd q(N);
    std::vector<double> s(n);
    for (std::size_t p = 0; p < N; ++p) {
        ens.state_at(p, ens.grid.step_count, s);
        q(p) = terminal.xi(s);
    }
    return conditional_tail_profile(ens.grid, ens.batch, basis, omega, q, a_coeff, ridge);
}

}  // namespace xvabsde
