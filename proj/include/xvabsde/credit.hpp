#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

#include "brownian.hpp"
#include "errors.hpp"
#include "jump.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "process.hpp"
#include "rng.hpp"
#include "time_grid.hpp"

namespace xvabsde {

// Mean-reverting square-root intensity driven by one component of the
// shared Brownian batch (the wrong/right-way risk channel); discretized by
// the full-truncation Euler scheme.
struct CirIntensity {
    double kappa = 0.0;      // mean-reversion speed
    double theta = 0.0;      // long-run level
    double xi = 0.0;         // vol-of-intensity
    double lambda0 = 0.0;
    std::size_t driver_dim = 0;  // Brownian component index
};

struct IntensitySpec {
    std::variant<GridProcess, CirIntensity> spec;

    static IntensitySpec constant(double v) { return {GridProcess::constant(v)}; }
    static IntensitySpec curve(std::function<double(double)> fn) {
        return {GridProcess::curve(std::move(fn))};
    }
    static IntensitySpec cir(CirIntensity c) { return {std::move(c)}; }
};

struct IntensityModel {
    IntensitySpec lambda_b;
    IntensitySpec lambda_c;
};

// Samples an intensity on the grid as an N x (m+1) array, lambda >= 0.
inline ArrayXXd sample_intensity(const IntensitySpec& spec, const TimeGrid& grid,
                                 const BrownianBatch& batch) {
    const std::size_t m = grid.step_count;
    const std::size_t N = batch.path_count;
    ArrayXXd lam(N, m + 1);
    if (const GridProcess* gp = std::get_if<GridProcess>(&spec.spec)) {
        for (std::size_t i = 0; i <= m; ++i) {
            const double v = (*gp)(0, i, grid.nodes[i]);
            if (v < 0.0) {
                throw std::invalid_argument("sample_intensity: negative intensity at node " +
                                            std::to_string(i));
            }
            lam.col(i).setConstant(v);
        }
        return lam;
    }
    const CirIntensity& cir = std::get<CirIntensity>(spec.spec);
    if (cir.lambda0 < 0.0 || cir.theta < 0.0 || cir.xi < 0.0) {
        throw std::invalid_argument("sample_intensity: CIR parameters must be nonnegative");
    }
    if (cir.driver_dim >= batch.dimension) {
        throw std::invalid_argument("sample_intensity: driver dimension out of range");
    }
    const std::size_t n = batch.dimension;
    parallel_paths(
        N, [] { return 0; },
        [&](std::size_t p, int&) {
            double x = cir.lambda0;  // full-truncation auxiliary state
            lam(p, 0) = std::max(x, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                const double xplus = std::max(x, 0.0);
                x += cir.kappa * (cir.theta - xplus) * grid.steps[i] +
                     cir.xi * std::sqrt(xplus) * batch.increments(p, i * n + cir.driver_dim);
                lam(p, i + 1) = std::max(x, 0.0);
            }
        });
    return lam;
}

// Cox default times: tau is the first grid node where the trapezoidal
// cumulative hazard exceeds an independent Exp(1) threshold drawn from a
// dedicated substream of threshold_seed. Equivalent in law to
// acceptance-rejection for the piecewise-linear hazard, but deterministic
// per seed.
inline DefaultTimes simulate_default_times(const ArrayXXd& lambda_b, const ArrayXXd& lambda_c,
                                           const TimeGrid& grid, std::uint64_t threshold_seed) {
    const std::size_t m = grid.step_count;
    const std::size_t N = static_cast<std::size_t>(lambda_b.rows());
    if (lambda_c.rows() != lambda_b.rows() ||
        static_cast<std::size_t>(lambda_b.cols()) != m + 1 ||
        static_cast<std::size_t>(lambda_c.cols()) != m + 1) {
        throw std::invalid_argument("simulate_default_times: intensity shape mismatch");
    }
    if ((lambda_b < 0.0).any() || (lambda_c < 0.0).any()) {
        throw std::invalid_argument("simulate_default_times: negative intensity");
    }
    const double inf = std::numeric_limits<double>::infinity();
    DefaultTimes out;
    out.tau_b.assign(N, inf);
    out.tau_c.assign(N, inf);
    out.node_b.assign(N, m + 1);
    out.node_c.assign(N, m + 1);
    out.node.assign(N, m + 1);
    out.first.assign(N, DefaultTimes::Defaulter::None);
    const CounterRng rng(threshold_seed);
    parallel_paths(
        N, [] { return 0; },
        [&](std::size_t p, int&) {
            const double eb = rng.exponential(streams::default_thresholds, p, 0, 0);
            const double ec = rng.exponential(streams::default_thresholds, p, 0, 1);
            double hb = 0.0, hc = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                hb += 0.5 * grid.steps[i] * (lambda_b(p, i) + lambda_b(p, i + 1));
                hc += 0.5 * grid.steps[i] * (lambda_c(p, i) + lambda_c(p, i + 1));
                if (out.node_b[p] == m + 1 && hb >= eb) {
                    out.node_b[p] = i + 1;
                    out.tau_b[p] = grid.nodes[i + 1];
                }
                if (out.node_c[p] == m + 1 && hc >= ec) {
                    out.node_c[p] = i + 1;
                    out.tau_c[p] = grid.nodes[i + 1];
                }
                if (out.node_b[p] != m + 1 && out.node_c[p] != m + 1) break;
            }
            if (out.tau_c[p] <= out.tau_b[p] && out.node_c[p] != m + 1) {
                // ties resolved counterparty-first
                out.first[p] = DefaultTimes::Defaulter::Counterparty;
                out.node[p] = out.node_c[p];
            } else if (out.node_b[p] != m + 1) {
                out.first[p] = DefaultTimes::Defaulter::Bank;
                out.node[p] = out.node_b[p];
            }
        });
    return out;
}

struct RecoverySpec {
    double r_b = 1.0;
    double r_c = 1.0;

    RecoverySpec() = default;
    RecoverySpec(double rb, double rc) : r_b(rb), r_c(rc) {
        if (rb < 0.0 || rb > 1.0 || rc < 0.0 || rc > 1.0) {
            throw std::invalid_argument("RecoverySpec: recovery rates must lie in [0, 1]");
        }
    }
};

// Sign convention: X > 0 means the counterparty posted variation margin to
// the bank; initial margins are nonnegative.
struct CollateralSpec {
    GridProcess x;      // variation margin, signed
    GridProcess i_tc;   // initial margin posted by the bank
    GridProcess i_fc;   // initial margin received from the counterparty
    GridProcess k_cap;  // regulatory capital
};

// theta^C = X + I^FC + R^C (M - X - I^FC)^+ + (M - X - I^FC)^-
// theta^B = X - I^TC + (M - X + I^TC)^+ + R^B (M - X + I^TC)^-
// with x^- = min(x, 0).
inline std::pair<ArrayXXd, ArrayXXd> close_out_values(const ArrayXXd& m_value,
                                                      const CollateralSpec& coll,
                                                      const RecoverySpec& rec,
                                                      const TimeGrid& grid) {
    const std::size_t N = static_cast<std::size_t>(m_value.rows());
    const std::size_t nodes = static_cast<std::size_t>(m_value.cols());
    if (nodes != grid.node_count()) {
        throw std::invalid_argument("close_out_values: node count mismatch");
    }
    ArrayXXd theta_b(N, nodes), theta_c(N, nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double t = grid.nodes[i];
        for (std::size_t p = 0; p < N; ++p) {
            const double x = coll.x(p, i, t);
            const double itc = coll.i_tc(p, i, t);
            const double ifc = coll.i_fc(p, i, t);
            const double uc = m_value(p, i) - x - ifc;
            const double ub = m_value(p, i) - x + itc;
            theta_c(p, i) = x + ifc + rec.r_c * std::max(uc, 0.0) + std::min(uc, 0.0);
            theta_b(p, i) = x - itc + std::max(ub, 0.0) + rec.r_b * std::min(ub, 0.0);
        }
    }
    return {theta_b, theta_c};
}

// Close-out value applied at the (snapped) default node of each defaulted
// path: theta^C if the counterparty defaulted first, theta^B otherwise.
inline double default_value(const ArrayXXd& theta_b, const ArrayXXd& theta_c,
                            const DefaultTimes& defaults, std::size_t path) {
    if (defaults.first[path] == DefaultTimes::Defaulter::None) {
        throw ContractViolation("default_value: path " + std::to_string(path) +
                                " has no default");
    }
    const std::size_t j = defaults.node[path];
    return defaults.first[path] == DefaultTimes::Defaulter::Counterparty ? theta_c(path, j)
                                                                         : theta_b(path, j);
}

}  // namespace xvabsde
