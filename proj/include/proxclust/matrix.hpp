#ifndef PROXCLUST_MATRIX_HPP
#define PROXCLUST_MATRIX_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "proxclust/error.hpp"

/**
 * @file matrix.hpp
 *
 * @brief Dense row-major matrices and the handful of spectral routines the
 * clustering pipeline needs: spectral norm, top-k right singular subspace,
 * row projection and Frobenius norm.
 */

namespace proxclust {

/**
 * @brief Row-major dense matrix of doubles.
 *
 * A default-constructed matrix is an empty placeholder; every other
 * constructor requires at least one row and one column.
 */
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), entries_(rows * cols, fill) {
        detail::require(rows >= 1 && cols >= 1, "DenseMatrix: dimensions must be at least 1x1");
        detail::require(std::isfinite(fill), "DenseMatrix: fill value must be finite");
    }

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries)) {
        detail::require(rows >= 1 && cols >= 1, "DenseMatrix: dimensions must be at least 1x1");
        detail::require(entries_.size() == rows * cols,
                        "DenseMatrix: entry count " + std::to_string(entries_.size()) +
                            " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
        detail::require(all_finite(), "DenseMatrix: entries must be finite");
    }

    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        detail::require(!rows.empty() && !rows.front().empty(), "DenseMatrix::from_rows: empty input");
        const std::size_t cols = rows.front().size();
        std::vector<double> entries;
        entries.reserve(rows.size() * cols);
        for (const auto& r : rows) {
            detail::require(r.size() == cols, "DenseMatrix::from_rows: ragged rows");
            entries.insert(entries.end(), r.begin(), r.end());
        }
        return DenseMatrix(rows.size(), cols, std::move(entries));
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix out(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            out(i, i) = 1.0;
        }
        return out;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return entries_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return entries_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return entries_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {entries_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {entries_.data() + i * cols_, cols_}; }

    std::span<double> entries() noexcept { return entries_; }
    std::span<const double> entries() const noexcept { return entries_; }

    bool all_finite() const noexcept {
        return std::all_of(entries_.begin(), entries_.end(), [](double x) { return std::isfinite(x); });
    }

    DenseMatrix transposed() const {
        DenseMatrix out(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                out(j, i) = (*this)(i, j);
            }
        }
        return out;
    }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

/// Result of a power-iteration spectral norm estimate.
struct SpectralEstimate {
    double value = 0.0;
    std::size_t iterations = 0;
    /// Relative eigen-residual |MᵀMv − ρv| / ρ at the returned vector.
    double residual = 0.0;
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

inline double norm(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) noexcept {
    return std::sqrt(squared_distance(a, b));
}

/// a · b
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    detail::require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out_row = out.row(i);
        for (std::size_t l = 0; l < a.cols(); ++l) {
            const double x = a(i, l);
            if (x == 0.0) {
                continue;
            }
            const auto b_row = b.row(l);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out_row[j] += x * b_row[j];
            }
        }
    }
    return out;
}

/// aᵀ · b
inline DenseMatrix matmul_transpose_left(const DenseMatrix& a, const DenseMatrix& b) {
    detail::require(a.rows() == b.rows(), "matmul_transpose_left: row counts differ");
    DenseMatrix out(a.cols(), b.cols());
    for (std::size_t l = 0; l < a.rows(); ++l) {
        const auto a_row = a.row(l);
        const auto b_row = b.row(l);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double x = a_row[i];
            if (x == 0.0) {
                continue;
            }
            auto out_row = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out_row[j] += x * b_row[j];
            }
        }
    }
    return out;
}

/// a · bᵀ
inline DenseMatrix matmul_transpose_right(const DenseMatrix& a, const DenseMatrix& b) {
    detail::require(a.cols() == b.cols(), "matmul_transpose_right: column counts differ");
    DenseMatrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            out(i, j) = dot(a.row(i), b.row(j));
        }
    }
    return out;
}

inline double frobenius_norm(const DenseMatrix& m) {
    detail::require(m.all_finite(), "frobenius_norm: matrix contains non-finite entries");
    double s = 0.0;
    for (double x : m.entries()) {
        s += x * x;
    }
    return std::sqrt(s);
}

namespace detail {

inline constexpr std::uint64_t kStartVectorSeed = 0x9e3779b97f4a7c15ULL;

inline void require_finite(const DenseMatrix& m, const char* where) {
    require(!m.empty(), std::string(where) + ": empty matrix");
    require(m.all_finite(), std::string(where) + ": matrix contains non-finite entries");
}

inline std::vector<double> random_unit_vector(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> v(n);
    double len = 0.0;
    while (len == 0.0) {
        for (auto& x : v) {
            x = unif(rng);
        }
        len = norm(v);
    }
    for (auto& x : v) {
        x /= len;
    }
    return v;
}

/// y = M v
inline void apply(const DenseMatrix& m, std::span<const double> v, std::span<double> y) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        y[i] = dot(m.row(i), v);
    }
}

/// w = Mᵀ y
inline void apply_transpose(const DenseMatrix& m, std::span<const double> y, std::span<double> w) {
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double yi = y[i];
        const auto r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            w[j] += yi * r[j];
        }
    }
}

/**
 * Orthonormalizes the columns of `a` in place with two passes of modified
 * Gram-Schmidt. Columns that collapse (rank deficiency) are replaced by
 * seeded random directions orthogonal to the earlier columns, so the result
 * always has orthonormal columns.
 */
inline void orthonormalize_columns(DenseMatrix& a) {
    const std::size_t n = a.rows();
    const std::size_t p = a.cols();
    detail::require(p <= n, "orthonormalize_columns: more columns than rows");
    std::mt19937_64 rng(kStartVectorSeed ^ (n * 1315423911ULL + p));
    std::vector<double> col(n);

    auto project_out = [&](std::size_t upto) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t q = 0; q < upto; ++q) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    s += a(i, q) * col[i];
                }
                for (std::size_t i = 0; i < n; ++i) {
                    col[i] -= s * a(i, q);
                }
            }
        }
    };

    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = a(i, j);
        }
        const double original = norm(col);
        project_out(j);
        double len = norm(col);
        // Relative collapse threshold; a zero column always collapses.
        if (!(len > 1e-10 * original)) {
            do {
                auto fresh = random_unit_vector(n, rng);
                std::copy(fresh.begin(), fresh.end(), col.begin());
                project_out(j);
                len = norm(col);
            } while (len <= 1e-3);
        }
        for (std::size_t i = 0; i < n; ++i) {
            a(i, j) = col[i] / len;
        }
    }
}

struct SymmetricEigen {
    std::vector<double> values;  // descending
    DenseMatrix vectors;         // column j pairs with values[j]
};

/// Cyclic Jacobi eigensolver for the small symmetric Ritz matrices.
inline SymmetricEigen symmetric_eigen(DenseMatrix h) {
    const std::size_t p = h.rows();
    DenseMatrix v = DenseMatrix::identity(p);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        double diag = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            diag += h(i, i) * h(i, i);
            for (std::size_t j = i + 1; j < p; ++j) {
                off += h(i, j) * h(i, j);
            }
        }
        if (off <= 1e-32 * diag || off == 0.0) {
            break;
        }
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                const double hij = h(i, j);
                if (hij == 0.0) {
                    continue;
                }
                const double theta = (h(j, j) - h(i, i)) / (2.0 * hij);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t l = 0; l < p; ++l) {
                    const double hli = h(l, i);
                    const double hlj = h(l, j);
                    h(l, i) = c * hli - s * hlj;
                    h(l, j) = s * hli + c * hlj;
                }
                for (std::size_t l = 0; l < p; ++l) {
                    const double hil = h(i, l);
                    const double hjl = h(j, l);
                    h(i, l) = c * hil - s * hjl;
                    h(j, l) = s * hil + c * hjl;
                }
                for (std::size_t l = 0; l < p; ++l) {
                    const double vli = v(l, i);
                    const double vlj = v(l, j);
                    v(l, i) = c * vli - s * vlj;
                    v(l, j) = s * vli + c * vlj;
                }
            }
        }
    }

    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h(a, a) > h(b, b); });

    SymmetricEigen out{std::vector<double>(p), DenseMatrix(p, p)};
    for (std::size_t j = 0; j < p; ++j) {
        out.values[j] = h(order[j], order[j]);
        for (std::size_t l = 0; l < p; ++l) {
            out.vectors(l, j) = v(l, order[j]);
        }
    }
    return out;
}

} // namespace detail

/**
 * @brief Largest singular value of `m` by power iteration on MᵀM.
 *
 * The start vector is drawn from a fixed seed, so repeated calls return
 * bit-identical results. Iteration stops once the relative eigen-residual
 * drops to `tol`; on reaching `max_iter` the current estimate is returned
 * with its residual. The Rayleigh quotient never overestimates the norm
 * beyond rounding.
 */
inline SpectralEstimate spectral_norm(const DenseMatrix& m, double tol = 1e-9, std::size_t max_iter = 10000) {
    detail::require(tol > 0.0, "spectral_norm: tol must be positive");
    detail::require(max_iter >= 1, "spectral_norm: max_iter must be at least 1");
    detail::require_finite(m, "spectral_norm");

    std::mt19937_64 rng(detail::kStartVectorSeed);
    std::vector<double> v = detail::random_unit_vector(m.cols(), rng);
    std::vector<double> y(m.rows());
    std::vector<double> w(m.cols());

    SpectralEstimate est;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        detail::apply(m, v, y);
        detail::apply_transpose(m, y, w);
        const double rho = dot(y, y);
        est.iterations = it;
        if (rho == 0.0) {
            est.value = 0.0;
            est.residual = 0.0;
            return est;
        }
        double res2 = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double r = w[j] - rho * v[j];
            res2 += r * r;
        }
        est.value = std::sqrt(rho);
        est.residual = std::sqrt(res2) / rho;
        if (est.residual <= tol) {
            return est;
        }
        const double len = norm(w);
        for (std::size_t j = 0; j < v.size(); ++j) {
            v[j] = w[j] / len;
        }
    }
    return est;
}

/**
 * @brief Orthonormal basis (n_cols x k) of the top-k right singular subspace.
 *
 * Block orthogonal iteration on MᵀM with a Rayleigh-Ritz step per sweep and
 * a few oversampled columns. When singular values tie at the k-th position
 * any orthonormal basis of the invariant subspace may come back, so callers
 * should compare projections rather than basis vectors.
 *
 * k == n_cols returns the identity; k == n_rows returns an orthonormal basis
 * of the row space, so projection leaves the rows unchanged.
 */
inline DenseMatrix top_right_singular_basis(const DenseMatrix& m, std::size_t k, double tol = 1e-10,
                                            std::size_t max_iter = 10000) {
    detail::require_finite(m, "top_right_singular_basis");
    detail::require(k >= 1 && k <= std::min(m.rows(), m.cols()),
                    "top_right_singular_basis: k=" + std::to_string(k) + " outside [1, min(rows, cols)]");
    const std::size_t d = m.cols();

    if (k == d) {
        return DenseMatrix::identity(d);
    }
    if (k == m.rows()) {
        DenseMatrix basis = m.transposed();
        detail::orthonormalize_columns(basis);
        return basis;
    }

    const std::size_t p = std::min(d, k + 10);
    std::mt19937_64 rng(detail::kStartVectorSeed + 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseMatrix q(d, p);
    for (double& x : q.entries()) {
        x = gauss(rng);
    }
    detail::orthonormalize_columns(q);

    DenseMatrix basis(d, k);
    for (std::size_t it = 1; it <= max_iter; ++it) {
        const DenseMatrix y = matmul(m, q);
        const DenseMatrix h = matmul_transpose_left(y, y);
        const auto eig = detail::symmetric_eigen(h);
        DenseMatrix w = matmul_transpose_left(m, y);  // MᵀM Q

        // Ritz vectors U = Q E_k and residuals MᵀM U − U Θ = W E_k − U Θ.
        double worst = 0.0;
        const double scale = eig.values.front();
        for (std::size_t j = 0; j < k; ++j) {
            double res2 = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                double u = 0.0;
                double wu = 0.0;
                for (std::size_t l = 0; l < p; ++l) {
                    u += q(i, l) * eig.vectors(l, j);
                    wu += w(i, l) * eig.vectors(l, j);
                }
                basis(i, j) = u;
                const double r = wu - eig.values[j] * u;
                res2 += r * r;
            }
            worst = std::max(worst, std::sqrt(res2));
        }
        if (scale <= 0.0 || worst <= tol * scale) {
            break;
        }
        q = std::move(w);
        detail::orthonormalize_columns(q);
    }
    return basis;
}

/// Coordinates of each row of `m` in `basis` (n_rows x k).
inline DenseMatrix project_coordinates(const DenseMatrix& m, const DenseMatrix& basis) {
    detail::require(basis.rows() == m.cols(), "project_coordinates: basis row count " +
                                                  std::to_string(basis.rows()) + " != matrix column count " +
                                                  std::to_string(m.cols()));
    return matmul(m, basis);
}

/// Orthogonal projection of each row onto span(basis), in ambient coordinates.
inline DenseMatrix project_rows(const DenseMatrix& m, const DenseMatrix& basis) {
    detail::require(basis.rows() == m.cols(), "project_rows: basis row count " + std::to_string(basis.rows()) +
                                                  " != matrix column count " + std::to_string(m.cols()));
    return matmul_transpose_right(matmul(m, basis), basis);
}

} // namespace proxclust

#endif
