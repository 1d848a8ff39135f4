#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "time_grid.hpp"

namespace xvabsde {

// First defaulter per path; default times are snapped to the right
// endpoint of their containing grid interval (node index), with
// node = m+1 as the "no default before T" sentinel.
struct DefaultTimes {
    enum class Defaulter : int { None = 0, Counterparty = 1, Bank = 2 };

    std::vector<double> tau_b, tau_c;   // years, +inf when no default
    std::vector<std::size_t> node_b, node_c, node;
    std::vector<Defaulter> first;

    std::size_t path_count() const { return first.size(); }
};

struct JumpSolution {
    ArrayXXd y;    // N x (m+1)
    ArrayXXd z;    // N x (m*n)
    ArrayXXd u_b;  // N x (m+1), jump compensation of the bank leg
    ArrayXXd u_c;  // N x (m+1), counterparty leg
};

// Indicator assembly of the jump solution from the reduced one:
//   Y_t = calY_t 1{t < tau} + theta_tau 1{t >= tau}
//   Z_t = calZ_t 1{t <= tau}
//   U^k_t = (theta^k_t - calY_t) 1{t <= tau}
inline JumpSolution assemble_jump_solution(const ArrayXXd& reduced_y, const ArrayXXd& reduced_z,
                                           std::size_t dimension, const ArrayXXd& theta_b,
                                           const ArrayXXd& theta_c, const DefaultTimes& defaults,
                                           const TimeGrid& grid) {
    const std::size_t N = static_cast<std::size_t>(reduced_y.rows());
    const std::size_t m = grid.step_count;
    if (defaults.path_count() != N) {
        throw std::invalid_argument("assemble_jump_solution: path count mismatch");
    }
    if (static_cast<std::size_t>(theta_b.rows()) != N ||
        static_cast<std::size_t>(theta_c.rows()) != N ||
        static_cast<std::size_t>(theta_b.cols()) != m + 1 ||
        static_cast<std::size_t>(theta_c.cols()) != m + 1) {
        throw std::invalid_argument("assemble_jump_solution: close-out array shape mismatch");
    }
    for (std::size_t p = 0; p < N; ++p) {
        if (std::isnan(defaults.tau_b[p]) || std::isnan(defaults.tau_c[p]) ||
            defaults.tau_b[p] < 0.0 || defaults.tau_c[p] < 0.0) {
            throw std::invalid_argument("assemble_jump_solution: invalid default time at path " +
                                        std::to_string(p));
        }
    }
    JumpSolution out;
    out.y = reduced_y;
    out.z = reduced_z;
    out.u_b.resize(N, m + 1);
    out.u_c.resize(N, m + 1);
    for (std::size_t p = 0; p < N; ++p) {
        const std::size_t j =
            (defaults.first[p] == DefaultTimes::Defaulter::None) ? m + 1 : defaults.node[p];
        for (std::size_t i = 0; i <= m; ++i) {
            if (i <= j) {
                out.u_b(p, i) = theta_b(p, i) - reduced_y(p, i);
                out.u_c(p, i) = theta_c(p, i) - reduced_y(p, i);
            } else {
                out.u_b(p, i) = 0.0;
                out.u_c(p, i) = 0.0;
            }
        }
        if (defaults.first[p] == DefaultTimes::Defaulter::None) continue;
        const double theta_tau = (defaults.first[p] == DefaultTimes::Defaulter::Counterparty)
                                     ? theta_c(p, j)
                                     : theta_b(p, j);
        for (std::size_t i = j; i <= m; ++i) out.y(p, i) = theta_tau;
        for (std::size_t i = j + 1; i < m; ++i) {
            for (std::size_t a = 0; a < dimension; ++a) out.z(p, i * dimension + a) = 0.0;
        }
    }
    return out;
}

}  // namespace xvabsde
