#ifndef PROXCLUST_MODEL_HPP
#define PROXCLUST_MODEL_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "proxclust/error.hpp"
#include "proxclust/matrix.hpp"

namespace proxclust {

using Labels = std::vector<std::size_t>;

/**
 * @brief Points (n x d), the cluster count k, and optional ground truth.
 *
 * When truth is present every label lies in [0, k) and every cluster index
 * occurs at least once.
 */
class Dataset {
public:
    Dataset() = default;

    Dataset(DenseMatrix points, std::size_t k, std::optional<Labels> truth = std::nullopt)
        : points_(std::move(points)), truth_(std::move(truth)), k_(k) {
        detail::require(!points_.empty(), "Dataset: no points");
        detail::require(k_ >= 1, "Dataset: k must be at least 1");
        detail::require(points_.rows() >= k_, "Dataset: n=" + std::to_string(points_.rows()) +
                                                  " is smaller than k=" + std::to_string(k_));
        if (truth_) {
            detail::require(truth_->size() == points_.rows(), "Dataset: truth length " +
                                                                  std::to_string(truth_->size()) +
                                                                  " != n=" + std::to_string(points_.rows()));
            std::vector<std::size_t> counts(k_, 0);
            for (std::size_t label : *truth_) {
                detail::require(label < k_, "Dataset: truth label " + std::to_string(label) + " >= k");
                ++counts[label];
            }
            for (std::size_t r = 0; r < k_; ++r) {
                detail::require(counts[r] > 0, "Dataset: cluster " + std::to_string(r) + " has no points");
            }
        }
    }

    const DenseMatrix& points() const noexcept { return points_; }
    const std::optional<Labels>& truth() const noexcept { return truth_; }
    bool has_truth() const noexcept { return truth_.has_value(); }
    std::size_t k() const noexcept { return k_; }
    std::size_t n() const noexcept { return points_.rows(); }
    std::size_t d() const noexcept { return points_.cols(); }

    const Labels& require_truth(const char* where) const {
        detail::require(truth_.has_value(), std::string(where) + ": dataset has no truth labels");
        return *truth_;
    }

    /// n_r for each true cluster.
    std::vector<std::size_t> cluster_sizes() const {
        const auto& labels = require_truth("cluster_sizes");
        std::vector<std::size_t> sizes(k_, 0);
        for (std::size_t label : labels) {
            ++sizes[label];
        }
        return sizes;
    }

private:
    DenseMatrix points_;
    std::optional<Labels> truth_;
    std::size_t k_ = 0;
};

enum class CenterRole { true_means, current, updated, boosted };

inline const char* to_string(CenterRole role) noexcept {
    switch (role) {
    case CenterRole::true_means:
        return "true-means";
    case CenterRole::current:
        return "current";
    case CenterRole::updated:
        return "updated";
    case CenterRole::boosted:
        return "boosted";
    }
    return "unknown";
}

/// k centers, one per row.
struct CenterSet {
    DenseMatrix centers;
    CenterRole role = CenterRole::current;

    std::size_t k() const noexcept { return centers.rows(); }
    std::span<const double> operator[](std::size_t r) const noexcept { return centers.row(r); }
};

/// Point-to-cluster labels and the matching cluster sizes.
struct Assignment {
    Labels labels;
    std::vector<std::size_t> sizes;

    static Assignment from_labels(Labels labels, std::size_t k) {
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t label : labels) {
            detail::require(label < k, "Assignment: label " + std::to_string(label) + " >= k");
            ++sizes[label];
        }
        return {std::move(labels), std::move(sizes)};
    }

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

namespace detail {

struct MeanAccumulator {
    DenseMatrix sums;
    std::vector<std::size_t> counts;
};

/// Per-cluster sums in point order; callers decide what an empty cluster means.
inline MeanAccumulator accumulate(const DenseMatrix& points, const Labels& labels, std::size_t k) {
    require(labels.size() == points.rows(), "labels length does not match point count");
    MeanAccumulator acc{DenseMatrix(k, points.cols()), std::vector<std::size_t>(k, 0)};
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const std::size_t r = labels[i];
        require(r < k, "label " + std::to_string(r) + " >= k=" + std::to_string(k));
        auto sum = acc.sums.row(r);
        const auto p = points.row(i);
        for (std::size_t j = 0; j < p.size(); ++j) {
            sum[j] += p[j];
        }
        ++acc.counts[r];
    }
    return acc;
}

} // namespace detail

/// Row r is the mean of the points labelled r. Every cluster must be non-empty.
inline CenterSet cluster_means(const DenseMatrix& points, const Labels& labels, std::size_t k) {
    auto acc = detail::accumulate(points, labels, k);
    for (std::size_t r = 0; r < k; ++r) {
        if (acc.counts[r] == 0) {
            throw ValidationError("cluster_means: cluster " + std::to_string(r) + " is empty");
        }
        const double inv = 1.0 / static_cast<double>(acc.counts[r]);
        for (double& x : acc.sums.row(r)) {
            x *= inv;
        }
    }
    return {std::move(acc.sums), CenterRole::true_means};
}

inline CenterSet true_means(const Dataset& dataset) {
    return cluster_means(dataset.points(), dataset.require_truth("true_means"), dataset.k());
}

/// C: row i is the mean of point i's true cluster.
inline DenseMatrix center_matrix(const Dataset& dataset, const CenterSet& means) {
    const auto& labels = dataset.require_truth("center_matrix");
    detail::require(means.k() == dataset.k() && means.centers.cols() == dataset.d(),
                    "center_matrix: means shape does not match dataset");
    DenseMatrix c(dataset.n(), dataset.d());
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        const auto mu = means[labels[i]];
        std::copy(mu.begin(), mu.end(), c.row(i).begin());
    }
    return c;
}

/// A − C with C built from the empirical cluster means.
inline DenseMatrix residual_matrix(const Dataset& dataset) {
    const DenseMatrix c = center_matrix(dataset, true_means(dataset));
    DenseMatrix out = dataset.points();
    auto e = out.entries();
    const auto ce = c.entries();
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] -= ce[i];
    }
    return out;
}

/// ||A − C||, the spectral "standard deviation times √n" of the clustering.
inline double residual_spectral_norm(const Dataset& dataset) { return spectral_norm(residual_matrix(dataset)).value; }

} // namespace proxclust

#endif
