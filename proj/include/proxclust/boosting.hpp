#ifndef PROXCLUST_BOOSTING_HPP
#define PROXCLUST_BOOSTING_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"

#include "proxclust/cluster.hpp"
#include "proxclust/error.hpp"
#include "proxclust/io.hpp"
#include "proxclust/matrix.hpp"
#include "proxclust/model.hpp"

/**
 * @file boosting.hpp
 *
 * @brief Separation boosting from two independent samples A and B of the
 * same mixture.
 *
 * Point i is embedded as X_i = (A_i′·B_1′, …, A_i′·B_n′) where primes denote
 * centering. The embedded cluster means θ_r = (C_r′·B_1′, …) are farther
 * apart relative to ||X − Z|| than the original means are relative to
 * ||A − C||, so Cluster's first step on X labels the A points well enough to
 * seed Lloyd on A.
 */

namespace proxclust {

/// Dense n x n embeddings above this size are refused.
inline constexpr std::size_t kMaxBoostPoints = 2000;

struct BoostInputs {
    Dataset sample_a;
    Dataset sample_b;

    void validate() const {
        detail::require(sample_a.n() == sample_b.n(), "BoostInputs: samples differ in n");
        detail::require(sample_a.d() == sample_b.d(), "BoostInputs: samples differ in d");
        detail::require(sample_a.k() == sample_b.k(), "BoostInputs: samples differ in k");
    }
};

struct BoostConfig {
    /// Component-graph edge length. Unset means (diameter of A ∪ B) / k.
    std::optional<double> edge_threshold;
    /// Cross-component fill L. Unset means 10⁶ × max within-component |X_ij|.
    std::optional<double> sentinel;
    bool use_components = false;

    void validate() const {
        detail::require(!edge_threshold || *edge_threshold > 0.0, "BoostConfig: edge_threshold must be positive");
        detail::require(!sentinel || *sentinel > 0.0, "BoostConfig: sentinel must be positive");
    }
};

/// Rows minus their mean.
inline DenseMatrix center_points(const DenseMatrix& points) {
    detail::require(!points.empty(), "center_points: no points");
    const std::size_t n = points.rows();
    std::vector<double> mean(points.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < points.cols(); ++j) {
            mean[j] += points(i, j);
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(n);
    }
    DenseMatrix out = points;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < points.cols(); ++j) {
            out(i, j) -= mean[j];
        }
    }
    return out;
}

/// X = A′·B′ᵀ with each sample centered by its own mean.
inline DenseMatrix boost_matrix(const DenseMatrix& a, const DenseMatrix& b) {
    detail::require(a.cols() == b.cols(), "boost_matrix: dimension mismatch");
    return matmul_transpose_right(center_points(a), center_points(b));
}

/// Embedded points X and the matrix Z whose row i is θ of A_i's true cluster.
inline std::pair<DenseMatrix, DenseMatrix> boost_embed(const BoostInputs& inputs) {
    inputs.validate();
    const auto& labels = inputs.sample_a.require_truth("boost_embed");
    DenseMatrix x = boost_matrix(inputs.sample_a.points(), inputs.sample_b.points());
    // θ_r = C_r′·B′ᵀ is the mean of the rows of X in cluster r, by linearity.
    const CenterSet theta = cluster_means(x, labels, inputs.sample_a.k());
    DenseMatrix z(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto t = theta[labels[i]];
        std::copy(t.begin(), t.end(), z.row(i).begin());
    }
    return {std::move(x), std::move(z)};
}

/**
 * Connected components of the graph joining rows at distance ≤ threshold.
 * Component ids are dense and ordered by each component's smallest row.
 */
inline std::vector<std::size_t> component_graph(const DenseMatrix& all_points, double threshold) {
    detail::require(threshold > 0.0, "component_graph: threshold must be positive");
    const std::size_t n = all_points.rows();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    const double t2 = threshold * threshold;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (squared_distance(all_points.row(i), all_points.row(j)) <= t2) {
                const std::size_t ri = find(i);
                const std::size_t rj = find(j);
                if (ri != rj) {
                    // The smaller index stays the root.
                    parent[std::max(ri, rj)] = std::min(ri, rj);
                }
            }
        }
    }
    std::vector<std::size_t> id(n);
    std::vector<std::size_t> root_id(n, n);
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (root_id[r] == n) {
            root_id[r] = next++;
        }
        id[i] = root_id[r];
    }
    return id;
}

struct ComponentEmbedding {
    DenseMatrix x;
    std::vector<std::size_t> component_a;
    std::vector<std::size_t> component_b;
    std::size_t components = 0;
    double threshold = 0.0;
    double sentinel = 0.0;
};

namespace detail {

inline double max_pairwise_distance(const DenseMatrix& points) {
    double best = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        for (std::size_t j = i + 1; j < points.rows(); ++j) {
            best = std::max(best, squared_distance(points.row(i), points.row(j)));
        }
    }
    return std::sqrt(best);
}

inline DenseMatrix stack_rows(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix out(a.rows() + b.rows(), a.cols());
    auto dst = out.entries();
    std::copy(a.entries().begin(), a.entries().end(), dst.begin());
    std::copy(b.entries().begin(), b.entries().end(), dst.begin() + static_cast<std::ptrdiff_t>(a.entries().size()));
    return out;
}

} // namespace detail

/**
 * Embedding for unbounded mean spread: A and B are split into components of
 * the threshold graph on A ∪ B, each component is centered by its own mean,
 * and entries pairing different components are set to the sentinel.
 */
inline ComponentEmbedding boost_embed_components(const BoostInputs& inputs, const BoostConfig& config) {
    inputs.validate();
    config.validate();
    const DenseMatrix& a = inputs.sample_a.points();
    const DenseMatrix& b = inputs.sample_b.points();
    const std::size_t n = a.rows();
    const std::size_t d = a.cols();
    const DenseMatrix all = detail::stack_rows(a, b);

    ComponentEmbedding emb;
    emb.threshold = config.edge_threshold.value_or(detail::max_pairwise_distance(all) /
                                                   static_cast<double>(inputs.sample_a.k()));
    if (!(emb.threshold > 0.0)) {
        // All points coincide: one component.
        emb.threshold = 1.0;
    }
    const auto ids = component_graph(all, emb.threshold);
    emb.components = *std::max_element(ids.begin(), ids.end()) + 1;
    emb.component_a.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n));
    emb.component_b.assign(ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end());

    DenseMatrix means(emb.components, d);
    std::vector<std::size_t> counts(emb.components, 0);
    for (std::size_t i = 0; i < all.rows(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            means(ids[i], j) += all(i, j);
        }
        ++counts[ids[i]];
    }
    for (std::size_t c = 0; c < emb.components; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            means(c, j) /= static_cast<double>(counts[c]);
        }
    }
    DenseMatrix ac = a;
    DenseMatrix bc = b;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            ac(i, j) -= means(emb.component_a[i], j);
            bc(i, j) -= means(emb.component_b[i], j);
        }
    }

    emb.x = DenseMatrix(n, n);
    double within_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (emb.component_a[i] == emb.component_b[j]) {
                emb.x(i, j) = dot(ac.row(i), bc.row(j));
                within_max = std::max(within_max, std::abs(emb.x(i, j)));
            }
        }
    }
    emb.sentinel = config.sentinel.value_or(1e6 * (within_max > 0.0 ? within_max : 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (emb.component_a[i] != emb.component_b[j]) {
                emb.x(i, j) = emb.sentinel;
            }
        }
    }
    return emb;
}

/**
 * @brief Boosted clustering of sample A.
 *
 * Cluster's first step runs on X; each A point takes the label of its row's
 * nearest seed, the means of those groups on A become the starting centers,
 * and Lloyd iterations run on A. Truth labels are never read on this path
 * except to fill the trace's center errors.
 */
inline RunTrace boost_cluster(const BoostInputs& inputs, const BoostConfig& config, const LloydConfig& lloyd) {
    inputs.validate();
    config.validate();
    lloyd.validate();
    const std::size_t n = inputs.sample_a.n();
    const std::size_t k = inputs.sample_a.k();
    detail::require(n <= kMaxBoostPoints, "boost_cluster: n=" + std::to_string(n) + " exceeds the dense embedding cap of " +
                                              std::to_string(kMaxBoostPoints));
    const DenseMatrix x = config.use_components
                              ? boost_embed_components(inputs, config).x
                              : boost_matrix(inputs.sample_a.points(), inputs.sample_b.points());
    const CenterSet seeds = spectral_seeds(x, k, lloyd.seed);

    Labels mapped(n);
    for (std::size_t i = 0; i < n; ++i) {
        mapped[i] = nearest_center(x.row(i), seeds.centers);
    }
    const auto acc = detail::accumulate(inputs.sample_a.points(), mapped, k);
    for (std::size_t r = 0; r < k; ++r) {
        if (acc.counts[r] == 0) {
            throw RuntimeFailure("boost_cluster: embedded cluster " + std::to_string(r) + " maps to no points of A");
        }
    }
    CenterSet start = cluster_means(inputs.sample_a.points(), mapped, k);
    start.role = CenterRole::boosted;
    return run_lloyd_from(inputs.sample_a, start, lloyd);
}

/// Per-pair check of Σ_{i∈T_r}[(A_i−μ_r)·v]² ≤ |μ_r−μ_s|²·|T_r|/16, v the unit μ_r→μ_s direction.
struct DirectionalVarianceCheck {
    double worst_ratio = 0.0;  ///< max over ordered pairs of lhs / rhs
    bool holds = true;
};

inline DirectionalVarianceCheck directional_variance_check(const Dataset& dataset) {
    const auto& labels = dataset.require_truth("directional_variance_check");
    const CenterSet means = true_means(dataset);
    const auto sizes = dataset.cluster_sizes();
    const std::size_t k = dataset.k();
    DirectionalVarianceCheck out;
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t s = 0; s < k; ++s) {
            if (r == s) {
                continue;
            }
            const double gap = distance(means[r], means[s]);
            detail::require(gap > 0.0, "directional_variance_check: coincident true means");
            double lhs = 0.0;
            for (std::size_t i = 0; i < dataset.n(); ++i) {
                if (labels[i] != r) {
                    continue;
                }
                double along = 0.0;
                const auto x = dataset.points().row(i);
                for (std::size_t j = 0; j < dataset.d(); ++j) {
                    along += (x[j] - means[r][j]) * (means[s][j] - means[r][j]) / gap;
                }
                lhs += along * along;
            }
            const double rhs = gap * gap * static_cast<double>(sizes[r]) / 16.0;
            out.worst_ratio = std::max(out.worst_ratio, lhs / rhs);
        }
    }
    out.holds = out.worst_ratio <= 1.0;
    return out;
}

/// Separation-to-noise before and after embedding, and the θ-gap lower bound.
struct BoostDiagnostics {
    std::size_t n = 0;
    double w_min = 0.0;
    double mean_gap = 0.0;        ///< min_{r≠s} |μ_r − μ_s|
    double residual_norm = 0.0;   ///< ||A − C||
    double theta_gap = 0.0;       ///< min_{r≠s} |θ_r − θ_s|
    double embedded_residual_norm = 0.0;  ///< ||X − Z||
    double input_ratio = 0.0;     ///< mean_gap / (||A − C||/√n)
    double boosted_ratio = 0.0;   ///< theta_gap / (||X − Z||/√n)
    double amplification = 0.0;   ///< boosted_ratio / input_ratio
    /// min over pairs of |θ_r − θ_s| / (|μ_r − μ_s|²·√(w_min·n)/4); ≥ 1 means the bound holds.
    double theta_bound_slack = 0.0;
    DirectionalVarianceCheck directional;

    bool amplified() const noexcept { return boosted_ratio > input_ratio; }
    bool theta_bound_holds() const noexcept { return theta_bound_slack >= 1.0; }
};

/// `w_min` defaults to the smallest empirical cluster fraction of A.
inline BoostDiagnostics boost_diagnostics(const BoostInputs& inputs, std::optional<double> w_min = std::nullopt) {
    inputs.validate();
    const Dataset& a = inputs.sample_a;
    const auto& labels = a.require_truth("boost_diagnostics");
    const std::size_t k = a.k();
    detail::require(k >= 2, "boost_diagnostics: need at least two clusters");
    const auto sizes = a.cluster_sizes();
    const double n = static_cast<double>(a.n());

    BoostDiagnostics diag;
    diag.n = a.n();
    diag.w_min = w_min.value_or(static_cast<double>(*std::min_element(sizes.begin(), sizes.end())) / n);
    detail::require(diag.w_min > 0.0, "boost_diagnostics: w_min must be positive");

    const CenterSet mu = true_means(a);
    auto [x, z] = boost_embed(inputs);
    const CenterSet theta = cluster_means(x, labels, k);

    diag.mean_gap = std::numeric_limits<double>::infinity();
    diag.theta_gap = std::numeric_limits<double>::infinity();
    diag.theta_bound_slack = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t s = r + 1; s < k; ++s) {
            const double g = distance(mu[r], mu[s]);
            const double t = distance(theta[r], theta[s]);
            diag.mean_gap = std::min(diag.mean_gap, g);
            diag.theta_gap = std::min(diag.theta_gap, t);
            const double bound = g * g * std::sqrt(diag.w_min * n) / 4.0;
            diag.theta_bound_slack = std::min(diag.theta_bound_slack, t / bound);
        }
    }
    diag.residual_norm = residual_spectral_norm(a);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            x(i, j) -= z(i, j);
        }
    }
    diag.embedded_residual_norm = spectral_norm(x).value;
    const double root_n = std::sqrt(n);
    diag.input_ratio = diag.mean_gap / (diag.residual_norm / root_n);
    diag.boosted_ratio = diag.theta_gap / (diag.embedded_residual_norm / root_n);
    diag.amplification = diag.boosted_ratio / diag.input_ratio;
    diag.directional = directional_variance_check(a);
    return diag;
}

inline nlohmann::json to_json(const BoostDiagnostics& d) {
    return {{"n", d.n},
            {"w_min", d.w_min},
            {"mean_gap", d.mean_gap},
            {"residual_norm", d.residual_norm},
            {"theta_gap", d.theta_gap},
            {"embedded_residual_norm", d.embedded_residual_norm},
            {"input_ratio", d.input_ratio},
            {"boosted_ratio", d.boosted_ratio},
            {"amplification", d.amplification},
            {"amplified", d.amplified()},
            {"theta_bound_slack", d.theta_bound_slack},
            {"theta_bound_holds", d.theta_bound_holds()},
            {"directional_variance_ratio", d.directional.worst_ratio},
            {"directional_variance_holds", d.directional.holds}};
}

/**
 * Row-major little-endian float64 dump of `m` to `path`, with a JSON header
 * {rows, cols, dtype, byte_order, layout} at the sidecar path.
 */
inline void write_matrix_binary(const std::filesystem::path& path, const DenseMatrix& m) {
    {
        if (path.has_parent_path()) {
            std::filesystem::create_directories(path.parent_path());
        }
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw RuntimeFailure("cannot open " + path.string() + " for writing");
        }
        for (double v : m.entries()) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            if constexpr (std::endian::native == std::endian::big) {
                bits = __builtin_bswap64(bits);
            }
            char bytes[8];
            std::memcpy(bytes, &bits, 8);
            out.write(bytes, 8);
        }
        if (!out) {
            throw RuntimeFailure("write failed: " + path.string());
        }
    }
    io::write_json(io::sidecar_path(path), {{"rows", m.rows()},
                                           {"cols", m.cols()},
                                           {"dtype", "float64"},
                                           {"byte_order", "little"},
                                           {"layout", "row-major"},
                                           {"data", path.filename().string()}});
}

inline DenseMatrix read_matrix_binary(const std::filesystem::path& path) {
    const auto header = io::read_json(io::sidecar_path(path));
    const auto rows = header.at("rows").get<std::size_t>();
    const auto cols = header.at("cols").get<std::size_t>();
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    std::vector<double> values(rows * cols);
    for (double& v : values) {
        char bytes[8];
        in.read(bytes, 8);
        std::uint64_t bits = 0;
        std::memcpy(&bits, bytes, 8);
        if constexpr (std::endian::native == std::endian::big) {
            bits = __builtin_bswap64(bits);
        }
        v = std::bit_cast<double>(bits);
    }
    detail::require(static_cast<bool>(in), path.string() + ": truncated matrix file");
    return DenseMatrix(rows, cols, std::move(values));
}

} // namespace proxclust

#endif
