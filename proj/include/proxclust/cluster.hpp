#ifndef PROXCLUST_CLUSTER_HPP
#define PROXCLUST_CLUSTER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "proxclust/error.hpp"
#include "proxclust/io.hpp"
#include "proxclust/matching.hpp"
#include "proxclust/matrix.hpp"
#include "proxclust/model.hpp"
#include "proxclust/proximity.hpp"

/**
 * @file cluster.hpp
 *
 * @brief Spectral seeding followed by Lloyd iterations, the pruned variant
 * for bounded-variance data, and the convergence diagnostics.
 *
 * run_cluster():
 *  1. project the points onto their best k-dimensional right singular
 *     subspace and solve k-means there to a constant factor (D²-weighted
 *     seeding, single-swap local search, Lloyd polish);
 *  2. starting from those centers, alternate nearest-center assignment and
 *     mean updates on the original points.
 */

namespace proxclust {

struct LloydConfig {
    std::size_t max_iters = 200;
    /// Stop once the largest center movement is at most this. Unset means
    /// 1e-9 times the diagonal of the data's bounding box.
    std::optional<double> move_tol;
    std::uint64_t seed = 0;

    void validate() const {
        detail::require(max_iters >= 1, "LloydConfig: max_iters must be at least 1");
        detail::require(!move_tol || *move_tol >= 0.0, "LloydConfig: move_tol must be >= 0");
    }
};

struct IterationRecord {
    std::size_t iteration = 0;  ///< 0 is the seed state
    double cost = 0.0;          ///< Σ_i min_r |A_i − ν_r|² for this iteration's centers
    std::size_t changed = 0;    ///< points whose nearest center changed
    double max_move = 0.0;
    std::vector<double> center_errors;  ///< δ_s = |μ_s − ν_s| per true cluster; empty without truth
};

struct RunTrace {
    std::vector<IterationRecord> records;
    CenterSet seeds;
    CenterSet centers;
    Assignment assignment;              ///< over `kept`, in the same order
    std::vector<std::size_t> kept;      ///< dataset indices that were clustered
    std::vector<std::size_t> removed;   ///< dataset indices pruned before clustering
    std::vector<std::size_t> matching;  ///< true cluster s -> center index at the end
    std::size_t lloyd_iterations = 0;
    bool converged = false;
    std::optional<ProximityReport> proximity;

    /// Predicted label for every kept point, in dataset order of `kept`.
    const Labels& labels() const noexcept { return assignment.labels; }
};

/// Index of the nearest center; ties go to the lowest index.
inline std::size_t nearest_center(std::span<const double> point, const DenseMatrix& centers, double* dist2 = nullptr) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < centers.rows(); ++r) {
        const double d = squared_distance(point, centers.row(r));
        if (d < best_d) {
            best_d = d;
            best = r;
        }
    }
    if (dist2) {
        *dist2 = best_d;
    }
    return best;
}

/// Σ_i min_r |A_i − ν_r|².
inline double kmeans_cost(const DenseMatrix& points, const CenterSet& centers) {
    detail::require(points.cols() == centers.centers.cols(), "kmeans_cost: dimension mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        double d = 0.0;
        nearest_center(points.row(i), centers.centers, &d);
        total += d;
    }
    return total;
}

/**
 * One Lloyd step: assign every point to its nearest center (ties to the
 * lowest index), then move each center to the mean of its points. A center
 * that receives no points keeps its previous position.
 */
inline std::pair<Assignment, CenterSet> lloyd_step(const DenseMatrix& points, const CenterSet& centers) {
    detail::require(centers.centers.all_finite(), "lloyd_step: centers must be finite");
    detail::require(points.cols() == centers.centers.cols(), "lloyd_step: dimension mismatch");
    const std::size_t k = centers.k();
    Labels labels(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        labels[i] = nearest_center(points.row(i), centers.centers);
    }
    auto acc = detail::accumulate(points, labels, k);
    for (std::size_t r = 0; r < k; ++r) {
        auto row = acc.sums.row(r);
        if (acc.counts[r] == 0) {
            const auto prev = centers[r];
            std::copy(prev.begin(), prev.end(), row.begin());
            continue;
        }
        const double inv = 1.0 / static_cast<double>(acc.counts[r]);
        for (double& x : row) {
            x *= inv;
        }
    }
    return {Assignment{std::move(labels), std::move(acc.counts)}, CenterSet{std::move(acc.sums), CenterRole::updated}};
}

namespace detail {

/// Nearest and second-nearest center distances for the swap search.
struct NearestPair {
    std::vector<std::size_t> first;
    std::vector<double> d1;
    std::vector<double> d2;
};

inline NearestPair nearest_two(const DenseMatrix& points, const std::vector<std::size_t>& centers) {
    const std::size_t n = points.rows();
    NearestPair np{std::vector<std::size_t>(n), std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        double b1 = std::numeric_limits<double>::infinity();
        double b2 = b1;
        std::size_t a1 = 0;
        for (std::size_t j = 0; j < centers.size(); ++j) {
            const double d = squared_distance(points.row(i), points.row(centers[j]));
            if (d < b1) {
                b2 = b1;
                b1 = d;
                a1 = j;
            } else if (d < b2) {
                b2 = d;
            }
        }
        np.first[i] = a1;
        np.d1[i] = b1;
        np.d2[i] = b2;
    }
    return np;
}

/// D²-weighted choice of k distinct point indices.
inline std::vector<std::size_t> d2_seeding(const DenseMatrix& points, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = points.rows();
    std::vector<std::size_t> chosen;
    std::vector<bool> taken(n, false);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    chosen.push_back(first(rng));
    taken[chosen.back()] = true;
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    while (chosen.size() < k) {
        const auto last = points.row(chosen.back());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = taken[i] ? 0.0 : std::min(d2[i], squared_distance(points.row(i), last));
            total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double target = unif(rng) * total;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i] || d2[i] == 0.0) {
                    continue;
                }
                pick = i;
                target -= d2[i];
                if (target < 0.0) {
                    break;
                }
            }
        }
        if (pick == n) {
            // Every remaining point duplicates a chosen one.
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i) {
                if (!taken[i]) {
                    free.push_back(i);
                }
            }
            std::uniform_int_distribution<std::size_t> any(0, free.size() - 1);
            pick = free[any(rng)];
        }
        chosen.push_back(pick);
        taken[pick] = true;
    }
    return chosen;
}

} // namespace detail

/**
 * @brief Constant-factor k-means solution on (typically projected) points.
 *
 * D²-weighted seeding picks k data points. Single-swap local search then
 * replaces a center by a data point whenever the best such swap brings the
 * cost below (1 − 1/k) times the current cost. Lloyd iterations polish the
 * result, which only lowers the cost. Deterministic given `seed`.
 */
inline CenterSet seed_centers(const DenseMatrix& projected, std::size_t k, std::uint64_t seed) {
    detail::require_finite(projected, "seed_centers");
    detail::require(k >= 1, "seed_centers: k must be at least 1");
    detail::require(projected.rows() >= k, "seed_centers: " + std::to_string(projected.rows()) +
                                               " points cannot seed k=" + std::to_string(k) + " centers");
    const std::size_t n = projected.rows();
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen = detail::d2_seeding(projected, k, rng);

    const double accept = 1.0 - 1.0 / static_cast<double>(k);
    auto np = detail::nearest_two(projected, chosen);
    double current = 0.0;
    for (double d : np.d1) {
        current += d;
    }
    std::vector<double> to_candidate(n);
    std::vector<double> swap_cost(k);
    while (k > 1 && current > 0.0) {
        double best_cost = std::numeric_limits<double>::infinity();
        std::size_t best_slot = 0;
        std::size_t best_point = 0;
        for (std::size_t cand = 0; cand < n; ++cand) {
            if (std::find(chosen.begin(), chosen.end(), cand) != chosen.end()) {
                continue;
            }
            for (std::size_t i = 0; i < n; ++i) {
                to_candidate[i] = squared_distance(projected.row(i), projected.row(cand));
            }
            std::fill(swap_cost.begin(), swap_cost.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < k; ++j) {
                    const double keep = np.first[i] == j ? np.d2[i] : np.d1[i];
                    swap_cost[j] += std::min(keep, to_candidate[i]);
                }
            }
            for (std::size_t j = 0; j < k; ++j) {
                if (swap_cost[j] < best_cost) {
                    best_cost = swap_cost[j];
                    best_slot = j;
                    best_point = cand;
                }
            }
        }
        if (!(best_cost < accept * current)) {
            break;
        }
        chosen[best_slot] = best_point;
        np = detail::nearest_two(projected, chosen);
        current = 0.0;
        for (double d : np.d1) {
            current += d;
        }
    }

    DenseMatrix centers(k, projected.cols());
    for (std::size_t j = 0; j < k; ++j) {
        const auto p = projected.row(chosen[j]);
        std::copy(p.begin(), p.end(), centers.row(j).begin());
    }
    CenterSet out{std::move(centers), CenterRole::current};
    Labels previous;
    for (int it = 0; it < 1000; ++it) {
        auto [assignment, updated] = lloyd_step(projected, out);
        const bool stable = assignment.labels == previous;
        previous = std::move(assignment.labels);
        out = std::move(updated);
        if (stable) {
            break;
        }
    }
    out.role = CenterRole::current;
    return out;
}

/**
 * Matches each true mean to a current center: nearest center when that is a
 * bijection, otherwise a minimum total-distance perfect matching.
 * Returns true cluster s -> center index.
 */
inline std::vector<std::size_t> match_centers(const CenterSet& truth, const CenterSet& current) {
    detail::require(truth.k() == current.k(), "match_centers: center counts differ");
    const std::size_t k = truth.k();
    std::vector<std::size_t> nearest(k);
    std::vector<bool> used(k, false);
    bool bijective = true;
    for (std::size_t s = 0; s < k; ++s) {
        nearest[s] = nearest_center(truth[s], current.centers);
        if (used[nearest[s]]) {
            bijective = false;
        }
        used[nearest[s]] = true;
    }
    if (bijective) {
        return nearest;
    }
    DenseMatrix cost(k, k);
    for (std::size_t s = 0; s < k; ++s) {
        for (std::size_t r = 0; r < k; ++r) {
            cost(s, r) = distance(truth[s], current[r]);
        }
    }
    return min_cost_matching(cost);
}

namespace detail {

inline double bounding_box_diagonal(const DenseMatrix& points) {
    double sum = 0.0;
    for (std::size_t j = 0; j < points.cols(); ++j) {
        double lo = points(0, j);
        double hi = lo;
        for (std::size_t i = 1; i < points.rows(); ++i) {
            lo = std::min(lo, points(i, j));
            hi = std::max(hi, points(i, j));
        }
        sum += (hi - lo) * (hi - lo);
    }
    return std::sqrt(sum);
}

inline std::vector<double> center_errors(const std::optional<CenterSet>& truth, const CenterSet& current,
                                         std::vector<std::size_t>* matching_out = nullptr) {
    if (!truth) {
        return {};
    }
    const auto matching = match_centers(*truth, current);
    std::vector<double> errors(truth->k());
    for (std::size_t s = 0; s < truth->k(); ++s) {
        errors[s] = distance((*truth)[s], current[matching[s]]);
    }
    if (matching_out) {
        *matching_out = matching;
    }
    return errors;
}

/// Lloyd iterations on `points` from `start`, recording one entry per step.
inline RunTrace iterate_lloyd(const DenseMatrix& points, const CenterSet& start, const LloydConfig& config,
                              const std::optional<CenterSet>& truth) {
    const double tol = config.move_tol.value_or(1e-9 * bounding_box_diagonal(points));
    RunTrace trace;
    trace.seeds = start;
    trace.seeds.role = CenterRole::current;

    CenterSet centers = trace.seeds;
    auto [assignment, next] = lloyd_step(points, centers);
    trace.records.push_back({0, kmeans_cost(points, centers), points.rows(), 0.0, center_errors(truth, centers)});

    for (std::size_t it = 1; it <= config.max_iters; ++it) {
        double move = 0.0;
        for (std::size_t r = 0; r < centers.k(); ++r) {
            move = std::max(move, distance(centers[r], next[r]));
        }
        centers = std::move(next);
        centers.role = CenterRole::current;
        auto step = lloyd_step(points, centers);
        std::size_t changed = 0;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            changed += step.first.labels[i] != assignment.labels[i] ? 1 : 0;
        }
        trace.records.push_back({it, kmeans_cost(points, centers), changed, move, center_errors(truth, centers)});
        trace.lloyd_iterations = it;
        assignment = std::move(step.first);
        next = std::move(step.second);
        if (move <= tol) {
            trace.converged = true;
            break;
        }
    }
    trace.centers = centers;
    trace.assignment = std::move(assignment);
    center_errors(truth, trace.centers, &trace.matching);
    trace.kept.resize(points.rows());
    std::iota(trace.kept.begin(), trace.kept.end(), std::size_t{0});
    return trace;
}

inline std::optional<CenterSet> truth_means_if_any(const Dataset& dataset) {
    if (!dataset.has_truth()) {
        return std::nullopt;
    }
    return true_means(dataset);
}

} // namespace detail

/// Step 1 alone: project onto the top-k right singular subspace, solve
/// k-means there, and lift the centers back to ambient coordinates.
inline CenterSet spectral_seeds(const DenseMatrix& points, std::size_t k, std::uint64_t seed) {
    const DenseMatrix basis = top_right_singular_basis(points, k);
    const DenseMatrix coords = project_coordinates(points, basis);
    const CenterSet in_subspace = seed_centers(coords, k, seed);
    return {matmul_transpose_right(in_subspace.centers, basis), CenterRole::current};
}

/**
 * @brief Spectral seeding followed by Lloyd iterations.
 *
 * With truth labels the trace records δ_s against the empirical cluster
 * means at every iteration. Supplying `c_for_report` also attaches the
 * proximity report of the dataset.
 */
inline RunTrace run_cluster(const Dataset& dataset, const LloydConfig& config,
                            std::optional<double> c_for_report = std::nullopt) {
    config.validate();
    detail::require(dataset.n() >= dataset.k(), "run_cluster: n must be at least k");
    const CenterSet seeds = spectral_seeds(dataset.points(), dataset.k(), config.seed);
    RunTrace trace = detail::iterate_lloyd(dataset.points(), seeds, config, detail::truth_means_if_any(dataset));
    if (c_for_report && dataset.has_truth()) {
        trace.proximity = proximity_report(dataset, *c_for_report);
    }
    return trace;
}

/// Lloyd iterations from caller-supplied centers (no spectral step).
inline RunTrace run_lloyd_from(const Dataset& dataset, const CenterSet& start, const LloydConfig& config) {
    config.validate();
    detail::require(start.k() == dataset.k() && start.centers.cols() == dataset.d(),
                    "run_lloyd_from: start centers do not match the dataset shape");
    return detail::iterate_lloyd(dataset.points(), start, config, detail::truth_means_if_any(dataset));
}

/// ⌈d² ln d⌉: centers with fewer assigned points are dropped by the pruned variant.
inline std::size_t popularity_threshold(std::size_t d) {
    const double dd = static_cast<double>(d);
    return static_cast<std::size_t>(std::ceil(dd * dd * std::log(dd)));
}

/**
 * @brief Clustering for mixtures with only a variance bound σ.
 *
 *  1. spectral seeding as in run_cluster;
 *  2. drop centers with fewer than ⌈d² ln d⌉ assigned points, and those points;
 *  3. drop points farther than σ√n/√d from every surviving center;
 *  4. run_cluster with the original k on what is left.
 *
 * The trace's `kept`/`removed` index the original dataset.
 */
inline RunTrace run_bounded_variance(const Dataset& dataset, double sigma, const LloydConfig& config) {
    config.validate();
    detail::require(sigma > 0.0, "run_bounded_variance: sigma must be positive");
    const std::size_t n = dataset.n();
    const std::size_t d = dataset.d();
    const std::size_t k = dataset.k();
    detail::require(n >= d, "run_bounded_variance: the σ√n/√d radius needs n >= d");
    const std::size_t threshold = popularity_threshold(d);
    detail::require(threshold * k < n, "run_bounded_variance: n=" + std::to_string(n) + " too small; every cluster needs more than ⌈d² ln d⌉=" +
                                           std::to_string(threshold) + " points");

    const CenterSet seeds = spectral_seeds(dataset.points(), k, config.seed);
    Labels nearest(n);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        nearest[i] = nearest_center(dataset.points().row(i), seeds.centers);
        ++counts[nearest[i]];
    }
    std::vector<std::size_t> popular;
    for (std::size_t r = 0; r < k; ++r) {
        if (counts[r] >= threshold) {
            popular.push_back(r);
        }
    }
    if (popular.empty()) {
        throw RuntimeFailure("run_bounded_variance: every center has fewer than " + std::to_string(threshold) +
                             " points; sigma or n is misconfigured");
    }
    DenseMatrix surviving(popular.size(), d);
    for (std::size_t j = 0; j < popular.size(); ++j) {
        const auto c = seeds[popular[j]];
        std::copy(c.begin(), c.end(), surviving.row(j).begin());
    }

    const double radius = sigma * std::sqrt(static_cast<double>(n)) / std::sqrt(static_cast<double>(d));
    const double radius2 = radius * radius;
    std::vector<std::size_t> kept;
    std::vector<std::size_t> removed;
    for (std::size_t i = 0; i < n; ++i) {
        const bool center_kept = counts[nearest[i]] >= threshold;
        double dist2 = 0.0;
        nearest_center(dataset.points().row(i), surviving, &dist2);
        if (center_kept && dist2 <= radius2) {
            kept.push_back(i);
        } else {
            removed.push_back(i);
        }
    }
    if (kept.size() < k) {
        throw RuntimeFailure("run_bounded_variance: only " + std::to_string(kept.size()) +
                             " points survive pruning; sigma or n is misconfigured");
    }

    DenseMatrix points(kept.size(), d);
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const auto p = dataset.points().row(kept[j]);
        std::copy(p.begin(), p.end(), points.row(j).begin());
    }
    std::optional<Labels> truth;
    if (dataset.has_truth()) {
        Labels sub(kept.size());
        std::vector<bool> present(k, false);
        for (std::size_t j = 0; j < kept.size(); ++j) {
            sub[j] = (*dataset.truth())[kept[j]];
            present[sub[j]] = true;
        }
        if (std::all_of(present.begin(), present.end(), [](bool b) { return b; })) {
            truth = std::move(sub);
        }
    }
    const Dataset survivors(std::move(points), k, std::move(truth));
    RunTrace trace = run_cluster(survivors, config);
    trace.kept = std::move(kept);
    trace.removed = std::move(removed);
    return trace;
}

/// Per-iteration max_s √n_s·δ_s / ||A − C||, or raw max_s δ_s when ||A − C|| is numerically zero.
struct ContractionTrace {
    std::vector<double> values;
    bool normalized = true;
};

inline ContractionTrace contraction_trace(const RunTrace& trace, const Dataset& dataset) {
    const auto sizes = dataset.cluster_sizes();
    const double spectral = residual_spectral_norm(dataset);
    ContractionTrace out;
    // A residual at rounding level relative to the data counts as zero.
    out.normalized = spectral > 1e-12 * frobenius_norm(dataset.points());
    for (const auto& rec : trace.records) {
        detail::require(rec.center_errors.size() == sizes.size(), "contraction_trace: trace has no center errors");
        double worst = 0.0;
        for (std::size_t s = 0; s < sizes.size(); ++s) {
            const double e = out.normalized
                                 ? std::sqrt(static_cast<double>(sizes[s])) * rec.center_errors[s] / spectral
                                 : rec.center_errors[s];
            worst = std::max(worst, e);
        }
        out.values.push_back(worst);
    }
    return out;
}

/// Contraction summary: steps taken before the sequence first reaches `floor`,
/// and whether every one of them shrank the error by at least `ratio`.
struct ContractionStats {
    std::size_t steps_to_floor = 0;
    std::size_t contracting_steps = 0;
    double worst_ratio = 0.0;
    bool reached_floor = false;
};

inline ContractionStats contraction_stats(const std::vector<double>& values, double ratio, double floor) {
    ContractionStats stats;
    for (std::size_t t = 0; t + 1 < values.size(); ++t) {
        if (values[t] <= floor) {
            stats.reached_floor = true;
            break;
        }
        ++stats.steps_to_floor;
        const double r = values[t + 1] / values[t];
        stats.worst_ratio = std::max(stats.worst_ratio, r);
        if (r <= ratio) {
            ++stats.contracting_steps;
        }
    }
    if (!values.empty() && values.back() <= floor) {
        stats.reached_floor = true;
    }
    return stats;
}

/// iter,cost,changed,delta_1..delta_k
inline void write_trace_csv(const std::filesystem::path& path, const RunTrace& trace) {
    auto out = io::open_for_write(path);
    out << "iter,cost,changed";
    const std::size_t k = trace.records.empty() ? 0 : trace.records.front().center_errors.size();
    for (std::size_t s = 0; s < k; ++s) {
        out << ",delta_" << (s + 1);
    }
    out << '\n';
    for (const auto& rec : trace.records) {
        out << rec.iteration << ',' << io::format_real(rec.cost) << ',' << rec.changed;
        for (double e : rec.center_errors) {
            out << ',' << io::format_real(e);
        }
        out << '\n';
    }
}

} // namespace proxclust

#endif
