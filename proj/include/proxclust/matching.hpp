#ifndef PROXCLUST_MATCHING_HPP
#define PROXCLUST_MATCHING_HPP

#include <cstddef>
#include <limits>
#include <vector>

#include "proxclust/error.hpp"
#include "proxclust/matrix.hpp"

namespace proxclust {

/**
 * @brief Minimum-cost perfect matching on a square cost matrix (Hungarian
 * method with potentials, O(k³)).
 *
 * Returns `row_to_col` with row_to_col[i] the column matched to row i.
 */
inline std::vector<std::size_t> min_cost_matching(const DenseMatrix& cost) {
    detail::require(cost.rows() == cost.cols(), "min_cost_matching: cost matrix must be square");
    const std::size_t n = cost.rows();
    constexpr double inf = std::numeric_limits<double>::infinity();

    // 1-based arrays; index 0 is the virtual root.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match_col(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match_col[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match_col[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match_col[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= n; ++j) {
        row_to_col[match_col[j] - 1] = j - 1;
    }
    return row_to_col;
}

} // namespace proxclust

#endif
