#pragma once

// Lexicographic enumeration of index subsets, shared by the exact baselines
// and the support-enumeration solver mode.

#include <cstddef>
#include <vector>

namespace rspca {

// Number of size-k subsets of {0..d-1}, saturating at cap to avoid overflow.
inline std::size_t binomial_capped(std::size_t d, std::size_t k,
                                   std::size_t cap = static_cast<std::size_t>(-1)) {
    if (k > d) return 0;
    if (k > d - k) k = d - k;
    std::size_t result = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        // result * (d - k + i) / i is exact at every step.
        if (result > cap / (d - k + i)) return cap;
        result = result * (d - k + i) / i;
        if (result >= cap) return cap;
    }
    return result;
}

// First size-k subset in lexicographic order: {0, 1, ..., k-1}.
inline std::vector<std::size_t> first_combination(std::size_t k) {
    std::vector<std::size_t> c(k);
    for (std::size_t i = 0; i < k; ++i) c[i] = i;
    return c;
}

// Advances c to the next size-k subset of {0..d-1} in lexicographic order;
// returns false when c was the last one.
inline bool next_combination(std::vector<std::size_t>& c, std::size_t d) {
    const std::size_t k = c.size();
    if (k == 0) return false;
    std::size_t i = k;
    while (i > 0) {
        --i;
        if (c[i] + 1 <= d - (k - i)) {
            ++c[i];
            for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace rspca
