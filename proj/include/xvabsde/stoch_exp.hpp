#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "brownian.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "time_grid.hpp"

namespace xvabsde {

struct StochasticExponentialSpec {
    // drift integrand b(p, i), per year
    std::function<double(std::size_t, std::size_t)> b;
    // vector integrand c(p, i, out), out has the batch dimension
    std::function<void(std::size_t, std::size_t, std::span<double>)> c;
};

// Discrete Doleans-Dade exponential on the grid:
//   Gamma_{0,t_{i+1}} = Gamma_{0,t_i} exp(c_i . dW_i - |c_i|^2 dt_i / 2 + b_i dt_i)
// Returned array is N x (m+1) with Gamma_{0,0} = 1.
inline ArrayXXd stochastic_exponential(const StochasticExponentialSpec& spec,
                                       const TimeGrid& grid, const BrownianBatch& batch) {
    const std::size_t m = grid.step_count;
    const std::size_t n = batch.dimension;
    const std::size_t N = batch.path_count;
    ArrayXXd gamma(N, m + 1);
    gamma.col(0).setOnes();
    parallel_paths(
        N, [n] { return std::vector<double>(n); },
        [&](std::size_t p, std::vector<double>& c) {
            double log_gamma = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double dt = grid.steps[i];
                double incr = spec.b ? spec.b(p, i) * dt : 0.0;
                if (spec.c) {
                    spec.c(p, i, c);
                    double dot = 0.0, norm2 = 0.0;
                    for (std::size_t a = 0; a < n; ++a) {
                        dot += c[a] * batch.increments(p, i * n + a);
                        norm2 += c[a] * c[a];
                    }
                    incr += dot - 0.5 * norm2 * dt;
                }
                log_gamma += incr;
                const double g = std::exp(log_gamma);
                if (!std::isfinite(g)) {
                    throw NonFiniteError("stochastic_exponential: overflow at path " +
                                         std::to_string(p) + ", step " + std::to_string(i + 1));
                }
                gamma(p, i + 1) = g;
            }
        });
    return gamma;
}

}  // namespace xvabsde
