#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include "linalg.hpp"
#include "rng.hpp"
#include "time_grid.hpp"

namespace xvabsde {

// Layout: rows index paths; column (i*n + a) holds step/node i, component a.
struct BrownianBatch {
    std::size_t path_count = 0;
    std::size_t dimension = 0;
    std::uint64_t seed = 0;
    ArrayXXd increments;    // N x (m*n), dW_i
    ArrayXXd cumulative;    // N x ((m+1)*n), W_{t_i}, first n columns zero
    ArrayXXd standardized;  // N x ((m+1)*n), w_i = W_{t_i}/sqrt(t_i), w_0 = 0

    double dw(std::size_t p, std::size_t i, std::size_t a) const {
        return increments(p, i * dimension + a);
    }
    double w(std::size_t p, std::size_t i, std::size_t a) const {
        return standardized(p, i * dimension + a);
    }
};

inline void finalize_brownian(BrownianBatch& batch, const TimeGrid& grid) {
    const std::size_t n = batch.dimension;
    const std::size_t m = grid.step_count;
    batch.cumulative.resize(batch.increments.rows(), (m + 1) * n);
    batch.standardized.resize(batch.increments.rows(), (m + 1) * n);
    batch.cumulative.leftCols(n).setZero();
    batch.standardized.leftCols(n).setZero();
    for (std::size_t i = 0; i < m; ++i) {
        const double inv_sqrt_t = 1.0 / std::sqrt(grid.nodes[i + 1]);
        for (std::size_t a = 0; a < n; ++a) {
            batch.cumulative.col((i + 1) * n + a) =
                batch.cumulative.col(i * n + a) + batch.increments.col(i * n + a);
            batch.standardized.col((i + 1) * n + a) =
                batch.cumulative.col((i + 1) * n + a) * inv_sqrt_t;
        }
    }
}

inline BrownianBatch generate_brownian(const TimeGrid& grid, std::size_t dimension,
                                       std::size_t path_count, std::uint64_t seed) {
    if (dimension < 1) {
        throw std::invalid_argument("generate_brownian: dimension must be at least 1");
    }
    if (path_count < 1) {
        throw std::invalid_argument("generate_brownian: path count must be at least 1");
    }
    const std::size_t m = grid.step_count;
    const std::size_t n = dimension;
    BrownianBatch batch;
    batch.path_count = path_count;
    batch.dimension = n;
    batch.seed = seed;
    batch.increments.resize(path_count, m * n);
    const CounterRng rng(seed);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(path_count); ++p) {
        for (std::size_t i = 0; i < m; ++i) {
            const double sqrt_dt = std::sqrt(grid.steps[i]);
            for (std::size_t a = 0; a < n; ++a) {
                batch.increments(p, i * n + a) =
                    sqrt_dt * rng.normal(streams::brownian, static_cast<std::uint64_t>(p), i, a);
            }
        }
    }
    finalize_brownian(batch, grid);
    return batch;
}

}  // namespace xvabsde
