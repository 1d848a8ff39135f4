#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "backward.hpp"
#include "conditional.hpp"
#include "credit.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "jump.hpp"
#include "linalg.hpp"
#include "paths.hpp"
#include "process.hpp"
#include "stoch_exp.hpp"

namespace xvabsde {

// All rates are per-year, sampled pathwise on the grid. q_s / gamma_s are
// per-asset repo rates and dividend yields (size n each).
struct RateDeck {
    GridProcess r;     // riskless / OIS
    GridProcess r_b;   // bank bond yield
    GridProcess r_c;   // counterparty bond yield
    GridProcess q_c;   // counterparty-bond repo rate
    GridProcess r_x;   // variation-margin remuneration
    GridProcess r_tc;  // initial margin posted: remuneration
    GridProcess r_fc;  // initial margin received: remuneration
    GridProcess r_k;   // cost of regulatory capital
    GridProcess r_f;   // unsecured funding rate
    std::vector<GridProcess> q_s;      // asset repo rates
    std::vector<GridProcess> gamma_s;  // asset dividend yields
};

// Zero-spread deck: r_b = r_f = r, r_c = q_c = 0, all carries zero.
inline RateDeck make_flat_deck(double r, std::size_t n) {
    RateDeck d;
    d.r = GridProcess::constant(r);
    d.r_b = GridProcess::constant(r);
    d.r_f = GridProcess::constant(r);
    d.q_s.assign(n, GridProcess());
    d.gamma_s.assign(n, GridProcess());
    return d;
}

struct NettingSet {
    // aggregate netted terminal payoff of the set
    std::function<double(std::span<const double>)> payoff;
};

namespace detail {

inline void check_deck(const RateDeck& deck, std::size_t n) {
    if (deck.q_s.size() != n || deck.gamma_s.size() != n) {
        throw std::invalid_argument("RateDeck: q_s / gamma_s must have the asset dimension");
    }
}

inline constexpr double kMaxDiffusionCondition = 1e12;

}  // namespace detail

// c(t,S) = sigma(t,S)^{-1} (mu(t,S) + diag(gamma^S - q^S) S), stored as an
// N x ((m+1)*n) array (node i, component a at column i*n + a). The Gamma
// weight and every reduced driver use -c. The inverse is applied per node
// with condition monitoring; a condition number above 1e12 is an error
// rather than a regularization (which would silently distort hedges).
inline ArrayXXd market_price_of_risk(const PathEnsemble& ens, const RateDeck& deck) {
    const std::size_t n = ens.dimension();
    const std::size_t m = ens.grid.step_count;
    const std::size_t N = ens.path_count();
    detail::check_deck(deck, n);
    ArrayXXd out(N, (m + 1) * n);
    struct Ctx {
        std::vector<double> s, mu;
        MatrixXd sigma;
        VectorXd rhs;
    };
    parallel_paths(
        N,
        [n] {
            return Ctx{std::vector<double>(n), std::vector<double>(n), MatrixXd(n, n),
                       VectorXd(n)};
        },
        [&](std::size_t p, Ctx& c) {
            for (std::size_t i = 0; i <= m; ++i) {
                const double t = ens.grid.nodes[i];
                ens.state_at(p, i, c.s);
                ens.model.drift(t, c.s, c.mu);
                ens.model.diffusion(t, c.s, c.sigma);
                for (std::size_t a = 0; a < n; ++a) {
                    c.rhs(a) = c.mu[a] +
                               (deck.gamma_s[a](p, i, t) - deck.q_s[a](p, i, t)) * c.s[a];
                }
                Eigen::JacobiSVD<MatrixXd> svd(c.sigma,
                                               Eigen::ComputeThinU | Eigen::ComputeThinV);
                const double smax = svd.singularValues()(0);
                const double smin = svd.singularValues()(static_cast<Eigen::Index>(n) - 1);
                if (!(smin > 0.0) || smax / smin > detail::kMaxDiffusionCondition) {
                    throw SingularDiffusionError(
                        "market_price_of_risk: singular diffusion at path " +
                        std::to_string(p) + ", node " + std::to_string(i));
                }
                VectorXd sol = svd.solve(c.rhs);
                for (std::size_t a = 0; a < n; ++a) out(p, i * n + a) = sol(a);
            }
        });
    return out;
}

namespace detail {

inline StochasticExponentialSpec gamma_spec(const ArrayXXd& mpr, std::size_t n,
                                            std::function<double(std::size_t, std::size_t)> b) {
    StochasticExponentialSpec spec;
    spec.b = std::move(b);
    spec.c = [&mpr, n](std::size_t p, std::size_t i, std::span<double> out) {
        for (std::size_t a = 0; a < n; ++a) out[a] = -mpr(p, i * n + a);
    };
    return spec;
}

inline Eigen::ArrayXd terminal_payoff(const PathEnsemble& ens, const NettingSet& netting) {
    const std::size_t N = ens.path_count();
    const std::size_t n = ens.dimension();
    Eigen::ArrayXd q(N);
    std::vector<double> s(n);
    for (std::size_t p = 0; p < N; ++p) {
        ens.state_at(p, ens.grid.step_count, s);
        q(p) = netting.payoff(s);
        if (!std::isfinite(q(p))) {
            throw NonFiniteError("terminal payoff: non-finite value at path " +
                                 std::to_string(p));
        }
    }
    return q;
}

}  // namespace detail

// V_t = E_t[ e^{-int r} Gamma_{t,T} payoff(S_T) ], per-path profile via the
// shared Hermite regression (plain mean at t=0).
inline ArrayXXd riskless_value(const PathEnsemble& ens, const RateDeck& deck,
                               const NettingSet& netting, const HermiteBasis& basis,
                               const ArrayXXd& mpr, double ridge = -1.0) {
    const std::size_t n = ens.dimension();
    auto spec = detail::gamma_spec(mpr, n, [&](std::size_t p, std::size_t i) {
        return -deck.r(p, i, ens.grid.nodes[i]);
    });
    ArrayXXd omega = stochastic_exponential(spec, ens.grid, ens.batch);
    Eigen::ArrayXd q = detail::terminal_payoff(ens, netting);
    return conditional_tail_profile(ens.grid, ens.batch, basis, omega, q, SourceFn{}, ridge);
}

inline ArrayXXd riskless_value(const PathEnsemble& ens, const RateDeck& deck,
                               const NettingSet& netting, const HermiteBasis& basis,
                               double ridge = -1.0) {
    return riskless_value(ens, deck, netting, basis, market_price_of_risk(ens, deck), ridge);
}

// Pathwise integrands of the five adjustment terms plus the rate-gap
// remainder (rho - r) V, all per year. Their sum reproduces the source G of
// the close-out M=V reduced equation exactly:
//   G = cva + dva + kva + mva + fva + rate_gap.
struct XvaIntegrands {
    ArrayXXd cva, dva, kva, mva, fva, rate_gap;

    ArrayXXd g() const { return cva + dva + kva + mva + fva + rate_gap; }
};

inline XvaIntegrands xva_integrands(const TimeGrid& grid, const RateDeck& deck,
                                    const CollateralSpec& coll, const RecoverySpec& rec,
                                    const ArrayXXd& v) {
    const std::size_t N = static_cast<std::size_t>(v.rows());
    const std::size_t nodes = static_cast<std::size_t>(v.cols());
    if (nodes != grid.node_count()) {
        throw std::invalid_argument("xva_integrands: value profile node count mismatch");
    }
    XvaIntegrands out;
    out.cva.resize(N, nodes);
    out.dva.resize(N, nodes);
    out.kva.resize(N, nodes);
    out.mva.resize(N, nodes);
    out.fva.resize(N, nodes);
    out.rate_gap.resize(N, nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double t = grid.nodes[i];
        for (std::size_t p = 0; p < N; ++p) {
            const double r = deck.r(p, i, t);
            const double rb = deck.r_b(p, i, t);
            const double rc = deck.r_c(p, i, t);
            const double qc = deck.q_c(p, i, t);
            const double x = coll.x(p, i, t);
            const double itc = coll.i_tc(p, i, t);
            const double ifc = coll.i_fc(p, i, t);
            const double u = v(p, i) - x + itc;
            const double w = v(p, i) - x - ifc;
            out.cva(p, i) = -(1.0 - rec.r_c) * (rc - qc) * std::max(w, 0.0);
            out.dva(p, i) = -(1.0 - rec.r_b) * (rb - r) * std::min(u, 0.0);
            out.kva(p, i) = deck.r_k(p, i, t) * coll.k_cap(p, i, t);
            out.mva(p, i) = deck.r_fc(p, i, t) * ifc - (deck.r_tc(p, i, t) + r) * itc +
                            (deck.r_x(p, i, t) + r) * x;
            out.fva(p, i) = (deck.r_f(p, i, t) - r) * std::min(u, 0.0);
            out.rate_gap(p, i) = (rb + rc - qc - r) * v(p, i);
        }
    }
    return out;
}

// Driver of the pre-default hedging equation, transcribed term by term:
//   g = -z . sigma^{-1}(mu + diag(gamma^S - q^S) S)
//       + (r^B - r) u^B + (r^C - q^C) u^C
//       - (r^TC + r) I^TC + r^FC I^FC + (r^X + r) X + r^K K - r vhat
//       - (r^F - r)(vhat - X + I^TC + u^B)^-
inline double driver_fundamental(const AssetModel& model, const RateDeck& deck,
                                 const CollateralSpec& coll, std::size_t path, std::size_t node,
                                 double t, std::span<const double> s, double vhat,
                                 std::span<const double> zhat, double u_b, double u_c) {
    const std::size_t n = model.dimension;
    detail::check_deck(deck, n);
    std::vector<double> mu(n);
    MatrixXd sigma(n, n);
    VectorXd rhs(n);
    model.drift(t, s, mu);
    model.diffusion(t, s, sigma);
    for (std::size_t a = 0; a < n; ++a) {
        rhs(a) = mu[a] + (deck.gamma_s[a](path, node, t) - deck.q_s[a](path, node, t)) * s[a];
    }
    Eigen::JacobiSVD<MatrixXd> svd(sigma, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(static_cast<Eigen::Index>(n) - 1);
    if (!(smin > 0.0) || smax / smin > detail::kMaxDiffusionCondition) {
        throw SingularDiffusionError("driver_fundamental: singular diffusion at path " +
                                     std::to_string(path) + ", node " + std::to_string(node));
    }
    VectorXd c = svd.solve(rhs);
    double g = 0.0;
    for (std::size_t a = 0; a < n; ++a) g -= zhat[a] * c(a);
    const double r = deck.r(path, node, t);
    const double x = coll.x(path, node, t);
    const double itc = coll.i_tc(path, node, t);
    const double ifc = coll.i_fc(path, node, t);
    g += (deck.r_b(path, node, t) - r) * u_b;
    g += (deck.r_c(path, node, t) - deck.q_c(path, node, t)) * u_c;
    g -= (deck.r_tc(path, node, t) + r) * itc;
    g += deck.r_fc(path, node, t) * ifc;
    g += (deck.r_x(path, node, t) + r) * x;
    g += deck.r_k(path, node, t) * coll.k_cap(path, node, t);
    g -= r * vhat;
    g -= (deck.r_f(path, node, t) - r) * std::min(vhat - x + itc + u_b, 0.0);
    return g;
}

enum class CloseOut { RisklessV, AdjustedVhat };

// Reduced driver g(t,S,y,z,theta^B - y, theta^C - y) with the close-out
// built from M per convention. M=V is linear (exogenous V profile
// required); M=Vhat closes over the solver's own y.
inline DriverSpec reduced_driver(CloseOut convention, const TimeGrid& grid,
                                 const RateDeck& deck, const CollateralSpec& coll,
                                 const RecoverySpec& rec, const ArrayXXd& mpr,
                                 std::size_t dimension, const ArrayXXd* v_profile = nullptr) {
    detail::check_deck(deck, dimension);
    const std::size_t n = dimension;
    auto rho = [deck, &grid](std::size_t p, std::size_t i) {
        const double t = grid.nodes[i];
        return deck.r_b(p, i, t) + deck.r_c(p, i, t) - deck.q_c(p, i, t);
    };
    if (convention == CloseOut::RisklessV) {
        if (v_profile == nullptr) {
            throw std::invalid_argument("reduced_driver: M=V requires the V profile");
        }
        ArrayXXd g_src = xva_integrands(grid, deck, coll, rec, *v_profile).g();
        return make_linear_driver(
            [g_src](std::size_t p, std::size_t i) { return g_src(p, i); },
            [rho](std::size_t p, std::size_t i) { return -rho(p, i); },
            [mpr, n](std::size_t p, std::size_t i, std::span<double> out) {
                for (std::size_t a = 0; a < n; ++a) out[a] = -mpr(p, i * n + a);
            },
            n);
    }
    DriverSpec d;
    d.f = [deck, coll, rec, mpr, n](std::size_t p, std::size_t i, double t,
                                    std::span<const double>, double y,
                                    std::span<const double> z) {
        double g = 0.0;
        for (std::size_t a = 0; a < n; ++a) g -= z[a] * mpr(p, i * n + a);
        const double r = deck.r(p, i, t);
        const double rb = deck.r_b(p, i, t);
        const double rc = deck.r_c(p, i, t);
        const double qc = deck.q_c(p, i, t);
        const double x = coll.x(p, i, t);
        const double itc = coll.i_tc(p, i, t);
        const double ifc = coll.i_fc(p, i, t);
        const double u = y - x + itc;
        const double w = y - x - ifc;
        g += deck.r_k(p, i, t) * coll.k_cap(p, i, t);
        g -= (deck.r_tc(p, i, t) + rb) * itc;
        g += (deck.r_fc(p, i, t) + rc - qc) * ifc;
        g += (deck.r_x(p, i, t) + rb + rc - qc) * x;
        g -= (rb + rc - qc) * y;
        g += (rb - r) * (std::max(u, 0.0) + rec.r_b * std::min(u, 0.0));
        g += (rc - qc) * (rec.r_c * std::max(w, 0.0) + std::min(w, 0.0));
        g += (deck.r_f(p, i, t) - r) * std::min(u, 0.0);
        return g;
    };
    return d;
}

// Closed form for M=V: Vhat_t = E_t[GammaHat_{t,T} payoff + int GammaHat G]
// with GammaHat = Gamma exp(-int (r^B + r^C - q^C)).
inline ArrayXXd solve_reduced_MV(const PathEnsemble& ens, const RateDeck& deck,
                                 const CollateralSpec& coll, const RecoverySpec& rec,
                                 const NettingSet& netting, const ArrayXXd& v,
                                 const HermiteBasis& basis, const ArrayXXd& mpr,
                                 double ridge = -1.0) {
    const std::size_t n = ens.dimension();
    auto spec = detail::gamma_spec(mpr, n, [&](std::size_t p, std::size_t i) {
        const double t = ens.grid.nodes[i];
        return -(deck.r_b(p, i, t) + deck.r_c(p, i, t) - deck.q_c(p, i, t));
    });
    ArrayXXd omega = stochastic_exponential(spec, ens.grid, ens.batch);
    Eigen::ArrayXd q = detail::terminal_payoff(ens, netting);
    ArrayXXd g_src = xva_integrands(ens.grid, deck, coll, rec, v).g();
    SourceFn source = [&g_src](std::size_t p, std::size_t i) { return g_src(p, i); };
    return conditional_tail_profile(ens.grid, ens.batch, basis, omega, q, source, ridge);
}

// Nonlinear reduced equation for M=Vhat, handed to the generic backward
// solver.
inline BackwardSolution solve_reduced_MVhat(const PathEnsemble& ens, const RateDeck& deck,
                                            const CollateralSpec& coll, const RecoverySpec& rec,
                                            const NettingSet& netting, const HermiteBasis& basis,
                                            const ArrayXXd& mpr,
                                            const BackwardConfig& config = {}) {
    DriverSpec driver = reduced_driver(CloseOut::AdjustedVhat, ens.grid, deck, coll, rec, mpr,
                                       ens.dimension());
    TerminalSpec terminal{netting.payoff};
    return solve_backward(ens, driver, terminal, basis, config);
}

// Effective discounting rate of the first-order M=Vhat expansion
// (indicators evaluated with strict inequalities as displayed; the
// boundary u = 0 is measure-zero in the continuous model).
inline ArrayXXd effective_rate(const TimeGrid& grid, const RateDeck& deck,
                               const CollateralSpec& coll, const RecoverySpec& rec,
                               const ArrayXXd& v) {
    const std::size_t N = static_cast<std::size_t>(v.rows());
    const std::size_t nodes = static_cast<std::size_t>(v.cols());
    if (nodes != grid.node_count()) {
        throw std::invalid_argument("effective_rate: value profile node count mismatch");
    }
    ArrayXXd out(N, nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double t = grid.nodes[i];
        for (std::size_t p = 0; p < N; ++p) {
            const double r = deck.r(p, i, t);
            const double rb = deck.r_b(p, i, t);
            const double rc = deck.r_c(p, i, t);
            const double qc = deck.q_c(p, i, t);
            const double x = coll.x(p, i, t);
            const double u = v(p, i) - x + coll.i_tc(p, i, t);
            const double w = v(p, i) - x - coll.i_fc(p, i, t);
            double fr = rb + rc - qc;
            fr -= (rb - r) * ((1.0 - rec.r_b) * (u >= 0.0 ? 1.0 : 0.0) + rec.r_b);
            fr -= (rc - qc) * ((1.0 - rec.r_c) * (w < 0.0 ? 1.0 : 0.0) + rec.r_c);
            fr -= (deck.r_f(p, i, t) - r) * (u < 0.0 ? 1.0 : 0.0);
            out(p, i) = fr;
        }
    }
    return out;
}

struct XvaReport {
    std::string convention;
    std::vector<double> t;
    // regression-smoothed per-path profiles
    ArrayXXd v_path, vhat_path, a_path;
    // unconditional profiles with standard errors
    ProfileStats v, vhat, a, cva, dva, kva, mva, fva, discount;
    // populated for the M=Vhat first-order report only
    ArrayXXd frak_r;
};

namespace detail {

inline SourceFn as_source(const ArrayXXd& arr) {
    return [&arr](std::size_t p, std::size_t i) { return arr(p, i); };
}

}  // namespace detail

// Term-by-term decomposition under M=V. The five adjustment terms use the
// GammaHat weight; `discount` collects the discounting-difference part
//   E_t[(D_rho - D_r) Gamma payoff] + E_t[int D_rho Gamma (rho - r) V ds],
// whose two halves cancel in expectation, so A reconciles against the term
// sum pathwise-exactly: A = CVA + DVA + KVA + MVA + FVA + discount.
inline XvaReport xva_decompose_MV(const PathEnsemble& ens, const RateDeck& deck,
                                  const CollateralSpec& coll, const RecoverySpec& rec,
                                  const NettingSet& netting, const HermiteBasis& basis,
                                  double ridge = -1.0) {
    const std::size_t n = ens.dimension();
    const std::size_t m = ens.grid.step_count;
    ArrayXXd mpr = market_price_of_risk(ens, deck);
    auto r_spec = detail::gamma_spec(mpr, n, [&](std::size_t p, std::size_t i) {
        return -deck.r(p, i, ens.grid.nodes[i]);
    });
    auto rho_spec = detail::gamma_spec(mpr, n, [&](std::size_t p, std::size_t i) {
        const double t = ens.grid.nodes[i];
        return -(deck.r_b(p, i, t) + deck.r_c(p, i, t) - deck.q_c(p, i, t));
    });
    ArrayXXd omega = stochastic_exponential(r_spec, ens.grid, ens.batch);
    ArrayXXd omega_hat = stochastic_exponential(rho_spec, ens.grid, ens.batch);
    Eigen::ArrayXd q = detail::terminal_payoff(ens, netting);
    Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(ens.path_count()));

    XvaReport rep;
    rep.convention = "M=V";
    rep.t = ens.grid.nodes;
    rep.v_path = conditional_tail_profile(ens.grid, ens.batch, basis, omega, q, SourceFn{},
                                          ridge);
    XvaIntegrands terms = xva_integrands(ens.grid, deck, coll, rec, rep.v_path);
    ArrayXXd g_src = terms.g();
    rep.vhat_path = conditional_tail_profile(ens.grid, ens.batch, basis, omega_hat, q,
                                             detail::as_source(g_src), ridge);
    rep.a_path = rep.vhat_path - rep.v_path;

    ArrayXXd v_s = tail_value_samples(ens.grid, omega, q, SourceFn{});
    ArrayXXd cva_s = tail_value_samples(ens.grid, omega_hat, zero, detail::as_source(terms.cva));
    ArrayXXd dva_s = tail_value_samples(ens.grid, omega_hat, zero, detail::as_source(terms.dva));
    ArrayXXd kva_s = tail_value_samples(ens.grid, omega_hat, zero, detail::as_source(terms.kva));
    ArrayXXd mva_s = tail_value_samples(ens.grid, omega_hat, zero, detail::as_source(terms.mva));
    ArrayXXd fva_s = tail_value_samples(ens.grid, omega_hat, zero, detail::as_source(terms.fva));
    ArrayXXd disc_s = tail_value_samples(ens.grid, omega_hat, q,
                                         detail::as_source(terms.rate_gap)) -
                      v_s;
    ArrayXXd vhat_s = v_s + cva_s + dva_s + kva_s + mva_s + fva_s + disc_s;

    rep.v = stats_from_samples(v_s);
    rep.vhat = stats_from_samples(vhat_s);
    rep.a = stats_from_samples(ArrayXXd(vhat_s - v_s));
    rep.cva = stats_from_samples(cva_s);
    rep.dva = stats_from_samples(dva_s);
    rep.kva = stats_from_samples(kva_s);
    rep.mva = stats_from_samples(mva_s);
    rep.fva = stats_from_samples(fva_s);
    rep.discount = stats_from_samples(disc_s);
    (void)m;
    return rep;
}

// First-order adjustment for M=Vhat: the linearized equation discounts the
// five term integrands at the effective rate, so
//   A_t = E_t[int D_frak(t,s) Gamma_{t,s} (cva+dva+kva+mva+fva)_s ds]
// and the decomposition reconciles exactly (discount column is zero).
inline XvaReport approx_adjustment_MVhat(const PathEnsemble& ens, const RateDeck& deck,
                                         const CollateralSpec& coll, const RecoverySpec& rec,
                                         const ArrayXXd& v, const HermiteBasis& basis,
                                         const ArrayXXd& mpr, double ridge = -1.0) {
    const std::size_t n = ens.dimension();
    XvaIntegrands terms = xva_integrands(ens.grid, deck, coll, rec, v);
    ArrayXXd frak = effective_rate(ens.grid, deck, coll, rec, v);
    auto spec = detail::gamma_spec(mpr, n, [&frak](std::size_t p, std::size_t i) {
        return -frak(p, i);
    });
    ArrayXXd omega = stochastic_exponential(spec, ens.grid, ens.batch);
    Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(ens.path_count()));
    ArrayXXd h0 = terms.cva + terms.dva + terms.kva + terms.mva + terms.fva;

    XvaReport rep;
    rep.convention = "M=Vhat (first order)";
    rep.t = ens.grid.nodes;
    rep.frak_r = frak;
    rep.v_path = v;
    rep.a_path = conditional_tail_profile(ens.grid, ens.batch, basis, omega, zero,
                                          detail::as_source(h0), ridge);
    rep.vhat_path = v + rep.a_path;

    ArrayXXd cva_s = tail_value_samples(ens.grid, omega, zero, detail::as_source(terms.cva));
    ArrayXXd dva_s = tail_value_samples(ens.grid, omega, zero, detail::as_source(terms.dva));
    ArrayXXd kva_s = tail_value_samples(ens.grid, omega, zero, detail::as_source(terms.kva));
    ArrayXXd mva_s = tail_value_samples(ens.grid, omega, zero, detail::as_source(terms.mva));
    ArrayXXd fva_s = tail_value_samples(ens.grid, omega, zero, detail::as_source(terms.fva));
    ArrayXXd a_s = cva_s + dva_s + kva_s + mva_s + fva_s;

    rep.v = stats_from_samples(v);
    rep.a = stats_from_samples(a_s);
    rep.vhat = stats_from_samples(ArrayXXd(v + a_s));
    rep.cva = stats_from_samples(cva_s);
    rep.dva = stats_from_samples(dva_s);
    rep.kva = stats_from_samples(kva_s);
    rep.mva = stats_from_samples(mva_s);
    rep.fva = stats_from_samples(fva_s);
    rep.discount = stats_from_samples(ArrayXXd(ArrayXXd::Zero(a_s.rows(), a_s.cols())));
    return rep;
}

// Same linearized equation handed to the discrete backward solver instead
// of the closed form; keeps the time-discretization error of the two sides
// of a nonlinear-vs-approximation comparison aligned.
inline BackwardSolution solve_adjustment_linearized(const PathEnsemble& ens,
                                                    const RateDeck& deck,
                                                    const CollateralSpec& coll,
                                                    const RecoverySpec& rec, const ArrayXXd& v,
                                                    const HermiteBasis& basis,
                                                    const ArrayXXd& mpr,
                                                    const BackwardConfig& config = {}) {
    const std::size_t n = ens.dimension();
    XvaIntegrands terms = xva_integrands(ens.grid, deck, coll, rec, v);
    ArrayXXd h0 = terms.cva + terms.dva + terms.kva + terms.mva + terms.fva;
    ArrayXXd frak = effective_rate(ens.grid, deck, coll, rec, v);
    DriverSpec driver = make_linear_driver(
        [h0](std::size_t p, std::size_t i) { return h0(p, i); },
        [frak](std::size_t p, std::size_t i) { return -frak(p, i); },
        [mpr, n](std::size_t p, std::size_t i, std::span<double> out) {
            for (std::size_t a = 0; a < n; ++a) out[a] = -mpr(p, i * n + a);
        },
        n);
    TerminalSpec terminal{[](std::span<const double>) { return 0.0; }};
    return solve_backward(ens, driver, terminal, basis, config);
}

// delta = sigma^{-T} Z (the replicating position in the assets).
inline VectorXd hedge_ratios(const VectorXd& z, const MatrixXd& sigma) {
    const Eigen::Index n = sigma.rows();
    if (sigma.cols() != n || z.size() != n) {
        throw std::invalid_argument("hedge_ratios: dimension mismatch");
    }
    Eigen::JacobiSVD<MatrixXd> svd(sigma.transpose(),
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(n - 1);
    if (!(smin > 0.0) || smax / smin > detail::kMaxDiffusionCondition) {
        throw SingularDiffusionError("hedge_ratios: singular diffusion matrix");
    }
    return svd.solve(z);
}

// Reconstruction of the defaultable solution from the reduced one.
inline JumpSolution assemble_full_value(const ArrayXXd& vhat, const ArrayXXd& zhat,
                                        std::size_t dimension, const ArrayXXd& theta_b,
                                        const ArrayXXd& theta_c, const DefaultTimes& defaults,
                                        const TimeGrid& grid) {
    return assemble_jump_solution(vhat, zhat, dimension, theta_b, theta_c, defaults, grid);
}

inline void write_report_csv(const XvaReport& rep, std::ostream& os) {
    csv_row(os, {"t", "V", "Vhat", "A", "CVA", "DVA", "KVA", "MVA", "FVA", "discount_term",
                 "stderr_V", "stderr_Vhat", "stderr_A", "stderr_CVA", "stderr_DVA",
                 "stderr_KVA", "stderr_MVA", "stderr_FVA", "stderr_discount"});
    for (std::size_t i = 0; i < rep.t.size(); ++i) {
        csv_row(os, {csv_number(rep.t[i]), csv_number(rep.v.mean[i]),
                     csv_number(rep.vhat.mean[i]), csv_number(rep.a.mean[i]),
                     csv_number(rep.cva.mean[i]), csv_number(rep.dva.mean[i]),
                     csv_number(rep.kva.mean[i]), csv_number(rep.mva.mean[i]),
                     csv_number(rep.fva.mean[i]), csv_number(rep.discount.mean[i]),
                     csv_number(rep.v.stderror[i]), csv_number(rep.vhat.stderror[i]),
                     csv_number(rep.a.stderror[i]), csv_number(rep.cva.stderror[i]),
                     csv_number(rep.dva.stderror[i]), csv_number(rep.kva.stderror[i]),
                     csv_number(rep.mva.stderror[i]), csv_number(rep.fva.stderror[i]),
                     csv_number(rep.discount.stderror[i])});
    }
}

}  // namespace xvabsde
