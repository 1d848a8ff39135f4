#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace xvabsde {

struct TimeGrid {
    double horizon = 0.0;
    std::size_t step_count = 0;
    std::vector<double> nodes;  // t_0 = 0 < ... < t_m = T
    std::vector<double> steps;  // steps[i] = t_{i+1} - t_i

    std::size_t node_count() const { return nodes.size(); }
};

inline TimeGrid build_time_grid(double horizon, std::size_t step_count) {
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("build_time_grid: horizon must be positive");
    }
    if (step_count < 1) {
        throw std::invalid_argument("build_time_grid: step count must be at least 1");
    }
    TimeGrid grid;
    grid.horizon = horizon;
    grid.step_count = step_count;
    grid.nodes.resize(step_count + 1);
    grid.steps.resize(step_count);
    for (std::size_t i = 0; i <= step_count; ++i) {
        grid.nodes[i] = horizon * static_cast<double>(i) / static_cast<double>(step_count);
    }
    grid.nodes.front() = 0.0;
    grid.nodes.back() = horizon;
    for (std::size_t i = 0; i < step_count; ++i) {
        grid.steps[i] = grid.nodes[i + 1] - grid.nodes[i];
    }
    return grid;
}

}  // namespace xvabsde
