#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include "asset_model.hpp"
#include "brownian.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "linalg.hpp"
#include "time_grid.hpp"

namespace xvabsde {

// Layout matches BrownianBatch: rows index paths, column (i*n + a) holds
// node i, component a.
struct PathEnsemble {
    TimeGrid grid;
    BrownianBatch batch;
    AssetModel model;
    ArrayXXd states;  // N x ((m+1)*n)

    std::size_t path_count() const { return batch.path_count; }
    std::size_t dimension() const { return model.dimension; }

    double s(std::size_t p, std::size_t i, std::size_t a) const {
        return states(p, i * model.dimension + a);
    }
    // contiguous is only guaranteed for a single path in a row-major copy;
    // use this helper to gather the state vector of path p at node i
    void state_at(std::size_t p, std::size_t i, std::span<double> out) const {
        for (std::size_t a = 0; a < model.dimension; ++a) out[a] = s(p, i, a);
    }
};

namespace detail {

inline void check_finite_state(const double* s, std::size_t n, std::size_t path,
                               std::size_t step, const char* where) {
    for (std::size_t a = 0; a < n; ++a) {
        if (!std::isfinite(s[a])) {
            throw NonFiniteError(std::string(where) + ": non-finite state at path " +
                                 std::to_string(path) + ", step " + std::to_string(step) +
                                 ", component " + std::to_string(a));
        }
    }
}

}  // namespace detail

inline PathEnsemble simulate_euler(const AssetModel& model, const TimeGrid& grid,
                                   const BrownianBatch& batch) {
    const std::size_t n = model.dimension;
    if (batch.dimension != n) {
        throw std::invalid_argument("simulate_euler: batch dimension does not match model");
    }
    const std::size_t m = grid.step_count;
    const std::size_t N = batch.path_count;
    PathEnsemble ens;
    ens.grid = grid;
    ens.batch = batch;
    ens.model = model;
    ens.states.resize(N, (m + 1) * n);
    for (std::size_t a = 0; a < n; ++a) ens.states.col(a) = model.s0(a);
    struct Ctx {
        std::vector<double> s, mu;
        MatrixXd sigma;
    };
    parallel_paths(
        N, [n] { return Ctx{std::vector<double>(n), std::vector<double>(n), MatrixXd(n, n)}; },
        [&](std::size_t p, Ctx& c) {
            for (std::size_t a = 0; a < n; ++a) c.s[a] = model.s0(a);
            for (std::size_t i = 0; i < m; ++i) {
                const double t = grid.nodes[i];
                const double dt = grid.steps[i];
                model.drift(t, c.s, c.mu);
                model.diffusion(t, c.s, c.sigma);
                for (std::size_t a = 0; a < n; ++a) {
                    double diff = 0.0;
                    for (std::size_t b = 0; b < n; ++b) {
                        diff += c.sigma(a, b) * batch.increments(p, i * n + b);
                    }
                    c.s[a] += c.mu[a] * dt + diff;
                }
                detail::check_finite_state(c.s.data(), n, p, i + 1, "simulate_euler");
                for (std::size_t a = 0; a < n; ++a) ens.states(p, (i + 1) * n + a) = c.s[a];
            }
        });
    return ens;
}

// Diagonal-noise Milstein: sigma diagonal, component a depending on s_a only;
// dsigma(t, s, out) supplies d sigma_aa / d s_a.
inline PathEnsemble simulate_milstein(
    const AssetModel& model, const TimeGrid& grid, const BrownianBatch& batch,
    const std::function<void(double, std::span<const double>, std::span<double>)>& dsigma) {
    const std::size_t n = model.dimension;
    if (batch.dimension != n) {
        throw std::invalid_argument("simulate_milstein: batch dimension does not match model");
    }
    if (!model.diagonal_noise) {
        throw std::invalid_argument(
            "simulate_milstein: only diagonal-noise models are supported");
    }
    const std::size_t m = grid.step_count;
    const std::size_t N = batch.path_count;
    PathEnsemble ens;
    ens.grid = grid;
    ens.batch = batch;
    ens.model = model;
    ens.states.resize(N, (m + 1) * n);
    for (std::size_t a = 0; a < n; ++a) ens.states.col(a) = model.s0(a);
    struct Ctx {
        std::vector<double> s, mu, ds;
        MatrixXd sigma;
    };
    parallel_paths(
        N,
        [n] {
            return Ctx{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                       MatrixXd(n, n)};
        },
        [&](std::size_t p, Ctx& c) {
            for (std::size_t a = 0; a < n; ++a) c.s[a] = model.s0(a);
            for (std::size_t i = 0; i < m; ++i) {
                const double t = grid.nodes[i];
                const double dt = grid.steps[i];
                model.drift(t, c.s, c.mu);
                model.diffusion(t, c.s, c.sigma);
                dsigma(t, c.s, c.ds);
                for (std::size_t a = 0; a < n; ++a) {
                    const double dw = batch.increments(p, i * n + a);
                    c.s[a] += c.mu[a] * dt + c.sigma(a, a) * dw +
                              0.5 * c.sigma(a, a) * c.ds[a] * (dw * dw - dt);
                }
                detail::check_finite_state(c.s.data(), n, p, i + 1, "simulate_milstein");
                for (std::size_t a = 0; a < n; ++a) ens.states(p, (i + 1) * n + a) = c.s[a];
            }
        });
    return ens;
}

}  // namespace xvabsde
