#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace wcluster {

/// Maximum-weight bipartite assignment (Kuhn-Munkres with potentials,
/// O(n^2 m)). `weights` is rows x cols, row-major. Returns for every row the
/// assigned column, or -1 when rows outnumber columns and the row is left out.
inline std::vector<long> max_weight_assignment(const std::vector<double>& weights, std::size_t rows,
                                               std::size_t cols) {
    if (rows == 0 || cols == 0) {
        return std::vector<long>(rows, -1);
    }
    const bool transposed = rows > cols;
    const std::size_t n = transposed ? cols : rows; // n <= m
    const std::size_t m = transposed ? rows : cols;
    auto cost = [&](std::size_t i, std::size_t j) {
        // i in [1, n], j in [1, m]; minimize the negated weight
        return transposed ? -weights[(j - 1) * cols + (i - 1)] : -weights[(i - 1) * cols + (j - 1)];
    };

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<long> result(rows, -1);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] == 0) {
            continue;
        }
        if (transposed) {
            result[j - 1] = long(p[j] - 1);
        } else {
            result[p[j] - 1] = long(j - 1);
        }
    }
    return result;
}

} // namespace wcluster
