#ifndef PROXCLUST_TESTS_JACOBI_SVD_HPP
#define PROXCLUST_TESTS_JACOBI_SVD_HPP

// Dense one-sided Jacobi SVD used only as a test oracle. It shares no code
// with the library's power and subspace iterations.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

struct Svd {
    std::vector<double> values;               ///< descending, length cols
    std::vector<std::vector<double>> right;   ///< right[t] is the t-th right singular vector
};

/// `a` is rows x cols, row-major.
inline Svd jacobi_svd(const std::vector<double>& a, std::size_t rows, std::size_t cols) {
    // Work on columns: u[j] is column j.
    std::vector<std::vector<double>> u(cols, std::vector<double>(rows));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            u[j][i] = a[i * cols + j];
        }
    }
    std::vector<std::vector<double>> v(cols, std::vector<double>(cols, 0.0));
    for (std::size_t j = 0; j < cols; ++j) {
        v[j][j] = 1.0;
    }
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < cols; ++p) {
            for (std::size_t q = p + 1; q < cols; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < rows; ++i) {
                    alpha += u[p][i] * u[p][i];
                    beta += u[q][i] * u[q][i];
                    gamma += u[p][i] * u[q][i];
                }
                if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) {
                    continue;
                }
                off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double up = u[p][i];
                    u[p][i] = c * up - s * u[q][i];
                    u[q][i] = s * up + c * u[q][i];
                }
                for (std::size_t i = 0; i < cols; ++i) {
                    const double vp = v[p][i];
                    v[p][i] = c * vp - s * v[q][i];
                    v[q][i] = s * vp + c * v[q][i];
                }
            }
        }
        if (off <= 1e-15) {
            break;
        }
    }
    std::vector<double> sv(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (double x : u[j]) {
            s += x * x;
        }
        sv[j] = std::sqrt(s);
    }
    std::vector<std::size_t> order(cols);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });
    Svd out;
    for (std::size_t j : order) {
        out.values.push_back(sv[j]);
        out.right.push_back(v[j]);
    }
    return out;
}

/// ||A − A·V_k·V_kᵀ||_F computed from the tail singular values.
inline double tail_frobenius(const Svd& svd, std::size_t k) {
    double s = 0.0;
    for (std::size_t t = k; t < svd.values.size(); ++t) {
        s += svd.values[t] * svd.values[t];
    }
    return std::sqrt(s);
}

inline double frobenius(const Svd& svd) { return tail_frobenius(svd, 0); }

} // namespace oracle

#endif
