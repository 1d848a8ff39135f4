#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace xvabsde {

using MultiIndex = std::vector<int>;

inline int order_of(const MultiIndex& k) {
    int s = 0;
    for (int v : k) s += v;
    return s;
}

// All multi-indices of dimension n with total order <= K, graded
// lexicographic: sorted by total order, then lexicographically within a
// grade. This enumeration is frozen; it defines the on-disk coefficient
// order.
inline std::vector<MultiIndex> enumerate_multi_indices(std::size_t n, int max_order) {
    if (n < 1) throw std::invalid_argument("enumerate_multi_indices: dimension must be >= 1");
    if (max_order < 0) throw std::invalid_argument("enumerate_multi_indices: order must be >= 0");
    std::vector<MultiIndex> out;
    MultiIndex k(n, 0);
    for (int grade = 0; grade <= max_order; ++grade) {
        // compositions of `grade` into n parts, lexicographic ascending
        std::fill(k.begin(), k.end(), 0);
        k.back() = grade;
        while (true) {
            out.push_back(k);
            if (k.front() == grade) break;
            // rightmost position with mass strictly to its right
            std::size_t i = n - 1;
            int tail = 0;
            while (true) {
                tail += k[i];
                --i;
                if (tail > 0) break;
            }
            k[i] += 1;
            for (std::size_t j = i + 1; j < n; ++j) k[j] = 0;
            k[n - 1] = tail - 1;
        }
    }
    return out;
}

inline std::size_t basis_size(std::size_t n, int max_order) {
    // C(n + K, K)
    std::size_t num = 1, den = 1;
    for (int i = 1; i <= max_order; ++i) {
        num *= n + static_cast<std::size_t>(i);
        den *= static_cast<std::size_t>(i);
    }
    return num / den;
}

}  // namespace xvabsde
