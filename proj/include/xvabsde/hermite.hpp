#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "linalg.hpp"
#include "multi_index.hpp"

namespace xvabsde {

// Orthonormal probabilists' Hermite polynomials: He_k / sqrt(k!) in the
// classical normalization, evaluated by the stable three-term recurrence
// sqrt(k+1) He_{k+1}(x) = x He_k(x) - sqrt(k) He_{k-1}(x).
inline double he_eval(int k, double x) {
    if (k < 0) throw std::invalid_argument("he_eval: order must be nonnegative");
    double prev = 1.0;
    if (k == 0) return prev;
    double cur = x;
    for (int j = 1; j < k; ++j) {
        double next = (x * cur - std::sqrt(static_cast<double>(j)) * prev) /
                      std::sqrt(static_cast<double>(j + 1));
        prev = cur;
        cur = next;
    }
    return cur;
}

// table[j] = He_j(x) for j = 0..max_order
inline void he_table(double x, int max_order, std::span<double> table) {
    table[0] = 1.0;
    if (max_order >= 1) table[1] = x;
    for (int j = 1; j < max_order; ++j) {
        table[j + 1] = (x * table[j] - std::sqrt(static_cast<double>(j)) * table[j - 1]) /
                       std::sqrt(static_cast<double>(j + 1));
    }
}

struct HermiteBasis {
    std::size_t dimension = 0;
    int max_order = 0;
    std::vector<MultiIndex> indices;  // graded-lex, index 0 = zero multi-index
    std::vector<int> orders;          // |k| per basis element

    HermiteBasis() = default;
    HermiteBasis(std::size_t n, int K)
        : dimension(n), max_order(K), indices(enumerate_multi_indices(n, K)) {
        orders.reserve(indices.size());
        for (const auto& k : indices) orders.push_back(order_of(k));
    }

    std::size_t size() const { return indices.size(); }
};

// Writes He_k(x) for every multi-index k of the basis into out[0..B).
// scratch must hold dimension*(max_order+1) doubles.
inline void basis_eval_into(const HermiteBasis& basis, std::span<const double> x,
                            std::span<double> scratch, std::span<double> out) {
    const std::size_t n = basis.dimension;
    const int K = basis.max_order;
    for (std::size_t a = 0; a < n; ++a) {
        he_table(x[a], K, scratch.subspan(a * (K + 1), K + 1));
    }
    for (std::size_t idx = 0; idx < basis.indices.size(); ++idx) {
        const MultiIndex& k = basis.indices[idx];
        double prod = 1.0;
        for (std::size_t a = 0; a < n; ++a) prod *= scratch[a * (K + 1) + k[a]];
        out[idx] = prod;
    }
}

inline VectorXd basis_eval(const HermiteBasis& basis, std::span<const double> x) {
    if (x.size() != basis.dimension) {
        throw std::invalid_argument("basis_eval: point dimension does not match basis");
    }
    VectorXd out(basis.size());
    std::vector<double> scratch(basis.dimension * (basis.max_order + 1));
    basis_eval_into(basis, x, scratch, {out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

// Conditioning rule: coefficient of multi-index k scaled by chi^{|k|/2}.
inline VectorXd condition_coeffs(const VectorXd& coeffs, const HermiteBasis& basis, double chi) {
    if (!(chi > 0.0) || chi > 1.0) {
        throw std::invalid_argument("condition_coeffs: chi must lie in (0, 1]");
    }
    if (static_cast<std::size_t>(coeffs.size()) != basis.size()) {
        throw std::invalid_argument("condition_coeffs: coefficient length mismatch");
    }
    VectorXd out(coeffs.size());
    const double sqrt_chi = std::sqrt(chi);
    for (std::size_t idx = 0; idx < basis.size(); ++idx) {
        out(idx) = coeffs(idx) * std::pow(sqrt_chi, basis.orders[idx]);
    }
    return out;
}

// Z identity for the normalized basis: component a of Z at state w is
// (1/sqrt(t)) sum_k g_k chi^{|k|/2} sqrt(k_a) He_{k - e_a}(w).
inline void z_from_coeffs_into(const VectorXd& coeffs, const HermiteBasis& basis, double chi,
                               double t, std::span<const double> w, std::span<double> scratch,
                               std::span<double> z_out) {
    const std::size_t n = basis.dimension;
    const int K = basis.max_order;
    for (std::size_t a = 0; a < n; ++a) {
        he_table(w[a], K, scratch.subspan(a * (K + 1), K + 1));
    }
    const double inv_sqrt_t = 1.0 / std::sqrt(t);
    const double sqrt_chi = std::sqrt(chi);
    for (std::size_t a = 0; a < n; ++a) z_out[a] = 0.0;
    for (std::size_t idx = 0; idx < basis.indices.size(); ++idx) {
        const MultiIndex& k = basis.indices[idx];
        if (basis.orders[idx] == 0) continue;
        const double scaled = coeffs(idx) * std::pow(sqrt_chi, basis.orders[idx]);
        if (scaled == 0.0) continue;
        for (std::size_t a = 0; a < n; ++a) {
            if (k[a] == 0) continue;
            double prod = std::sqrt(static_cast<double>(k[a])) * scratch[a * (K + 1) + k[a] - 1];
            for (std::size_t b = 0; b < n; ++b) {
                if (b != a) prod *= scratch[b * (K + 1) + k[b]];
            }
            z_out[a] += scaled * prod * inv_sqrt_t;
        }
    }
}

inline VectorXd z_from_coeffs(const VectorXd& coeffs, const HermiteBasis& basis, double chi,
                              double t, std::span<const double> w) {
    if (!(t > 0.0)) {
        throw std::invalid_argument("z_from_coeffs: t must be positive; step 0 is handled "
                                    "separately by the backward solver");
    }
    if (w.size() != basis.dimension) {
        throw std::invalid_argument("z_from_coeffs: state dimension mismatch");
    }
    VectorXd z(basis.dimension);
    std::vector<double> scratch(basis.dimension * (basis.max_order + 1));
    z_from_coeffs_into(coeffs, basis, chi, t, w, scratch,
                       {z.data(), static_cast<std::size_t>(z.size())});
    return z;
}

// |LHS - RHS| of the addition formula
//   He_k(sqrt(chi) w + sqrt(1-chi) x)
//     = sum_{j <= k} prod_a sqrt(C(k_a, j_a)) chi^{|j|/2} (1-chi)^{(|k|-|j|)/2}
//       He_j(w) He_{k-j}(x)
// evaluated componentwise for a product multi-index.
inline double addition_formula_check(const MultiIndex& k, double chi, std::span<const double> w,
                                     std::span<const double> x) {
    if (chi < 0.0 || chi > 1.0) {
        throw std::invalid_argument("addition_formula_check: chi must lie in [0, 1]");
    }
    const std::size_t n = k.size();
    if (w.size() != n || x.size() != n) {
        throw std::invalid_argument("addition_formula_check: dimension mismatch");
    }
    const double sc = std::sqrt(chi);
    const double so = std::sqrt(1.0 - chi);
    double lhs = 1.0;
    for (std::size_t a = 0; a < n; ++a) lhs *= he_eval(k[a], sc * w[a] + so * x[a]);
    // 1-d expansion per component, then multiply: the product structure
    // factorizes the sum exactly.
    double rhs = 1.0;
    for (std::size_t a = 0; a < n; ++a) {
        double comp = 0.0;
        for (int j = 0; j <= k[a]; ++j) {
            double binom = 1.0;
            for (int i = 0; i < j; ++i) {
                binom *= static_cast<double>(k[a] - i) / static_cast<double>(i + 1);
            }
            comp += std::sqrt(binom) * std::pow(sc, j) * std::pow(so, k[a] - j) *
                    he_eval(j, w[a]) * he_eval(k[a] - j, x[a]);
        }
        rhs *= comp;
    }
    return std::abs(lhs - rhs);
}

}  // namespace xvabsde
