#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "hermite.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "paths.hpp"
#include "regression.hpp"

namespace xvabsde {

struct DriverSpec {
    // f(path, step, t, s, y, z)
    std::function<double(std::size_t, std::size_t, double, std::span<const double>, double,
                         std::span<const double>)>
        f;
    bool is_linear = false;
    // when is_linear: f = A + B y + C . z sampled pathwise
    std::function<double(std::size_t, std::size_t)> lin_a;
    std::function<double(std::size_t, std::size_t)> lin_b;
    std::function<void(std::size_t, std::size_t, std::span<double>)> lin_c;
};

inline DriverSpec make_linear_driver(std::function<double(std::size_t, std::size_t)> a,
                                     std::function<double(std::size_t, std::size_t)> b,
                                     std::function<void(std::size_t, std::size_t,
                                                        std::span<double>)> c,
                                     std::size_t dimension) {
    DriverSpec d;
    d.is_linear = true;
    d.lin_a = a;
    d.lin_b = b;
    d.lin_c = c;
    d.f = [a, b, c, dimension](std::size_t p, std::size_t i, double, std::span<const double>,
                               double y, std::span<const double> z) {
        double val = (a ? a(p, i) : 0.0) + (b ? b(p, i) : 0.0) * y;
        if (c) {
            std::vector<double> cv(dimension);
            c(p, i, cv);
            for (std::size_t k = 0; k < dimension; ++k) val += cv[k] * z[k];
        }
        return val;
    };
    return d;
}

struct TerminalSpec {
    std::function<double(std::span<const double>)> xi;
};

struct BackwardConfig {
    enum class Scheme { Explicit, Implicit };
    enum class Route { ConditionNext, DirectCurrent };
    enum class Z0Rule { FittedCoeff, CrossMoment };

    Scheme scheme = Scheme::Explicit;
    Route route = Route::ConditionNext;
    Z0Rule z0 = Z0Rule::FittedCoeff;
    double fp_tol = 1e-10;
    int max_fp_iters = 50;
    double ridge = -1.0;  // negative requests the library default
    bool store_coeffs = false;
};

struct StepDiagnostics {
    double residual_norm = 0.0;
    double condition = 0.0;
};

struct BackwardSolution {
    ArrayXXd y;                             // N x (m+1)
    ArrayXXd z;                             // N x (m*n), z at node i in cols [i*n, (i+1)*n)
    std::vector<StepDiagnostics> diagnostics;  // per step 0..m-1
    std::vector<VectorXd> coeffs;           // per step, when requested

    double zval(std::size_t p, std::size_t i, std::size_t a, std::size_t n) const {
        return z(p, i * n + a);
    }
};

namespace detail {

inline void build_design(const HermiteBasis& basis, const BrownianBatch& batch,
                         std::size_t node, MatrixXd& design) {
    const std::size_t N = batch.path_count;
    const std::size_t n = basis.dimension;
    design.resize(N, basis.size());
    parallel_paths(
        N,
        [&] {
            return std::pair<std::vector<double>, std::vector<double>>(
                std::vector<double>(n), std::vector<double>(n * (basis.max_order + 1)));
        },
        [&](std::size_t p, auto& ctx) {
            auto& [x, scratch] = ctx;
            for (std::size_t a = 0; a < n; ++a) x[a] = batch.w(p, node, a);
            std::vector<double> row(basis.size());
            basis_eval_into(basis, x, scratch, row);
            for (std::size_t j = 0; j < basis.size(); ++j) design(p, j) = row[j];
        });
}

}  // namespace detail

// Discretized backward scheme with Hermite-regression conditional
// expectations on the standardized states w_i.
inline BackwardSolution solve_backward(const PathEnsemble& ens, const DriverSpec& driver,
                                       const TerminalSpec& terminal, const HermiteBasis& basis,
                                       const BackwardConfig& config = {}) {
    // the martingale part follows the driving batch (which may carry fewer
    // factors than the state), the driver's state argument the model
    const std::size_t n = ens.batch.dimension;
    const std::size_t ns = ens.dimension();
    if (basis.dimension != n) {
        throw std::invalid_argument(
            "solve_backward: basis dimension does not match the driving batch");
    }
    const std::size_t m = ens.grid.step_count;
    const std::size_t N = ens.path_count();
    const BrownianBatch& batch = ens.batch;
    const TimeGrid& grid = ens.grid;

    BackwardSolution sol;
    sol.y.resize(N, m + 1);
    sol.z = ArrayXXd::Zero(N, m * n);
    sol.diagnostics.resize(m);
    if (config.store_coeffs) sol.coeffs.resize(m);

    // terminal condition
    parallel_paths(
        N, [ns] { return std::vector<double>(ns); },
        [&](std::size_t p, std::vector<double>& s) {
            ens.state_at(p, m, s);
            const double v = terminal.xi(s);
            if (!std::isfinite(v)) {
                throw NonFiniteError("solve_backward: non-finite terminal value at path " +
                                     std::to_string(p));
            }
            sol.y(p, m) = v;
        });

    MatrixXd design;
    VectorXd target(N);
    Eigen::ArrayXd ey(N);

    for (std::size_t ii = m; ii-- > 1;) {
        const std::size_t i = ii;
        const double t = grid.nodes[i];
        const double dt = grid.steps[i];
        const double chi = grid.nodes[i] / grid.nodes[i + 1];

        FitResult gfit;
        try {
            if (config.route == BackwardConfig::Route::ConditionNext) {
                detail::build_design(basis, batch, i + 1, design);
            } else {
                detail::build_design(basis, batch, i, design);
            }
            gfit = ols_fit(design, sol.y.col(i + 1).matrix(), config.ridge);
        } catch (const IllConditionedError& e) {
            throw IllConditionedError(std::string(e.what()) + " (backward step " +
                                      std::to_string(i) + ")");
        }

        // Z at node i
        if (config.route == BackwardConfig::Route::ConditionNext) {
            parallel_paths(
                N,
                [&] {
                    return std::pair<std::vector<double>, std::vector<double>>(
                        std::vector<double>(n),
                        std::vector<double>(n * (basis.max_order + 1)));
                },
                [&](std::size_t p, auto& ctx) {
                    auto& [w, scratch] = ctx;
                    for (std::size_t a = 0; a < n; ++a) w[a] = batch.w(p, i, a);
                    std::vector<double> zv(n);
                    z_from_coeffs_into(gfit.coeffs, basis, chi, t, w, scratch, zv);
                    for (std::size_t a = 0; a < n; ++a) sol.z(p, i * n + a) = zv[a];
                });
        } else {
            // smoothed cross-moment: regress Y_{i+1} dW_i / dt on the current basis
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t p = 0; p < N; ++p) {
                    target(p) = sol.y(p, i + 1) * batch.increments(p, i * n + a) / dt;
                }
                FitResult zfit = ols_fit(design, target, config.ridge);
                VectorXd fitted = design * zfit.coeffs;
                for (std::size_t p = 0; p < N; ++p) sol.z(p, i * n + a) = fitted(p);
            }
        }

        // conditional mean of Y_{i+1} at node i (needed by the implicit scheme)
        if (config.scheme == BackwardConfig::Scheme::Implicit) {
            if (config.route == BackwardConfig::Route::ConditionNext) {
                VectorXd cond = condition_coeffs(gfit.coeffs, basis, chi);
                parallel_paths(
                    N,
                    [&] {
                        return std::pair<std::vector<double>, std::vector<double>>(
                            std::vector<double>(n),
                            std::vector<double>(n * (basis.max_order + 1)));
                    },
                    [&](std::size_t p, auto& ctx) {
                        auto& [w, scratch] = ctx;
                        for (std::size_t a = 0; a < n; ++a) w[a] = batch.w(p, i, a);
                        std::vector<double> row(basis.size());
                        basis_eval_into(basis, w, scratch, row);
                        double acc = 0.0;
                        for (std::size_t j = 0; j < basis.size(); ++j) acc += cond(j) * row[j];
                        ey(p) = acc;
                    });
            } else {
                VectorXd fitted = design * gfit.coeffs;
                for (std::size_t p = 0; p < N; ++p) ey(p) = fitted(p);
            }
        }

        if (config.scheme == BackwardConfig::Scheme::Explicit) {
            parallel_paths(
                N,
                [&] {
                    return std::pair<std::vector<double>, std::vector<double>>(
                        std::vector<double>(ns), std::vector<double>(n));
                },
                [&](std::size_t p, auto& ctx) {
                    auto& [s, zv] = ctx;
                    ens.state_at(p, i, s);
                    for (std::size_t a = 0; a < n; ++a) zv[a] = sol.z(p, i * n + a);
                    target(p) = sol.y(p, i + 1) +
                                driver.f(p, i, t, s, sol.y(p, i + 1), zv) * dt;
                });
            FitResult hfit;
            try {
                hfit = ols_fit(design, target, config.ridge);
            } catch (const IllConditionedError& e) {
                throw IllConditionedError(std::string(e.what()) + " (backward step " +
                                          std::to_string(i) + ")");
            }
            sol.diagnostics[i] = {hfit.residual_norm, hfit.condition};
            if (config.store_coeffs) sol.coeffs[i] = hfit.coeffs;
            if (config.route == BackwardConfig::Route::ConditionNext) {
                VectorXd cond = condition_coeffs(hfit.coeffs, basis, chi);
                parallel_paths(
                    N,
                    [&] {
                        return std::pair<std::vector<double>, std::vector<double>>(
                            std::vector<double>(n),
                            std::vector<double>(n * (basis.max_order + 1)));
                    },
                    [&](std::size_t p, auto& ctx) {
                        auto& [w, scratch] = ctx;
                        for (std::size_t a = 0; a < n; ++a) w[a] = batch.w(p, i, a);
                        std::vector<double> row(basis.size());
                        basis_eval_into(basis, w, scratch, row);
                        double acc = 0.0;
                        for (std::size_t j = 0; j < basis.size(); ++j)
                            acc += cond(j) * row[j];
                        sol.y(p, i) = acc;
                    });
            } else {
                VectorXd fitted = design * hfit.coeffs;
                for (std::size_t p = 0; p < N; ++p) sol.y(p, i) = fitted(p);
            }
        } else {
            sol.diagnostics[i] = {gfit.residual_norm, gfit.condition};
            if (config.store_coeffs) sol.coeffs[i] = gfit.coeffs;
            parallel_paths(
                N,
                [&] {
                    return std::pair<std::vector<double>, std::vector<double>>(
                        std::vector<double>(ns), std::vector<double>(n));
                },
                [&](std::size_t p, auto& ctx) {
                    auto& [s, zv] = ctx;
                    ens.state_at(p, i, s);
                    for (std::size_t a = 0; a < n; ++a) zv[a] = sol.z(p, i * n + a);
                    double y = ey(p);
                    bool converged = false;
                    for (int it = 0; it < config.max_fp_iters; ++it) {
                        double next = ey(p) + driver.f(p, i, t, s, y, zv) * dt;
                        if (std::abs(next - y) <= config.fp_tol) {
                            y = next;
                            converged = true;
                            break;
                        }
                        y = next;
                    }
                    if (!converged) {
                        throw NoConvergenceError(
                            "solve_backward: implicit fixed point did not converge at step " +
                            std::to_string(i) + ", path " + std::to_string(p));
                    }
                    sol.y(p, i) = y;
                });
        }
    }

    // step 0: trivial sigma-algebra, conditional expectations are means
    {
        const double dt = grid.steps[0];
        std::vector<double> z0(n, 0.0);
        if (m >= 1) {
            if (config.z0 == BackwardConfig::Z0Rule::FittedCoeff && m > 1) {
                // coefficient of the first-order basis element of the fit of
                // Y_1 at w_1 (the chi -> 0 limit of the derivative identity);
                // much lower variance than the raw cross moment
                detail::build_design(basis, batch, 1, design);
                FitResult gfit = ols_fit(design, sol.y.col(1).matrix(), config.ridge);
                for (std::size_t a = 0; a < n; ++a) {
                    MultiIndex e(n, 0);
                    e[static_cast<std::size_t>(a)] = 1;
                    for (std::size_t j = 0; j < basis.size(); ++j) {
                        if (basis.indices[j] == e) z0[a] = gfit.coeffs(j) / std::sqrt(dt);
                    }
                }
            } else {
                for (std::size_t a = 0; a < n; ++a) {
                    double acc = 0.0;
                    for (std::size_t p = 0; p < N; ++p) {
                        acc += sol.y(p, 1) * batch.increments(p, a);
                    }
                    z0[a] = acc / (static_cast<double>(N) * dt);
                }
            }
        }
        for (std::size_t a = 0; a < n; ++a) sol.z.col(a) = z0[a];

        std::vector<double> s0(ns);
        for (std::size_t a = 0; a < ns; ++a) s0[a] = ens.model.s0(a);
        const double ey0 = sol.y.col(1).mean();
        double y0;
        if (config.scheme == BackwardConfig::Scheme::Explicit) {
            double acc = 0.0;
            for (std::size_t p = 0; p < N; ++p) {
                acc += sol.y(p, 1) + driver.f(p, 0, 0.0, s0, sol.y(p, 1), z0) * dt;
            }
            y0 = acc / static_cast<double>(N);
        } else {
            y0 = ey0;
            bool converged = false;
            for (int it = 0; it < config.max_fp_iters; ++it) {
                double acc = 0.0;
                for (std::size_t p = 0; p < N; ++p) acc += driver.f(p, 0, 0.0, s0, y0, z0);
                double next = ey0 + acc / static_cast<double>(N) * dt;
                if (std::abs(next - y0) <= config.fp_tol) {
                    y0 = next;
                    converged = true;
                    break;
                }
                y0 = next;
            }
            if (!converged) {
                throw NoConvergenceError(
                    "solve_backward: implicit fixed point did not converge at step 0");
            }
        }
        sol.y.col(0).setConstant(y0);
        sol.diagnostics[0] = {0.0, 1.0};
    }
    return sol;
}

}  // namespace xvabsde
