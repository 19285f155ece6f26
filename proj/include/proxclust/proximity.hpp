#ifndef PROXCLUST_PROXIMITY_HPP
#define PROXCLUST_PROXIMITY_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "proxclust/error.hpp"
#include "proxclust/io.hpp"
#include "proxclust/matrix.hpp"
#include "proxclust/model.hpp"

/**
 * @file proximity.hpp
 *
 * @brief The proximity condition against ground truth.
 *
 * For true clusters T_r with sizes n_r, the separation threshold is
 *
 *     Δ_rs = (c·k/√n_r + c·k/√n_s) · ||A − C||
 *
 * and a point of T_r is good when, for every s ≠ r, its projection onto the
 * μ_r–μ_s line is at least Δ_rs closer to μ_r than to μ_s.
 */

namespace proxclust {

struct ProximityReport {
    DenseMatrix delta;               ///< k x k, symmetric, zero diagonal
    std::vector<double> margins;     ///< min over s≠r of margin(i,r,s) − Δ_rs; +inf when k == 1
    std::vector<bool> good;          ///< good[i] == (margins[i] >= 0)
    double good_fraction = 0.0;
    double c_constant = 1.0;
    double residual_norm = 0.0;      ///< ||A − C||

    std::size_t good_count() const { return static_cast<std::size_t>(std::count(good.begin(), good.end(), true)); }
};

/// Δ_rs from cluster sizes and a precomputed ||A − C||.
inline DenseMatrix delta_from_sizes(const std::vector<std::size_t>& sizes, double residual_norm, double c) {
    detail::require(c > 0.0, "delta matrix: c must be positive");
    const std::size_t k = sizes.size();
    const double ck = c * static_cast<double>(k);
    DenseMatrix delta(k, k);
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t s = 0; s < k; ++s) {
            if (r != s) {
                delta(r, s) = (ck / std::sqrt(static_cast<double>(sizes[r])) +
                               ck / std::sqrt(static_cast<double>(sizes[s]))) *
                              residual_norm;
            }
        }
    }
    return delta;
}

inline DenseMatrix delta_matrix(const Dataset& dataset, double c) {
    detail::require(c > 0.0, "delta_matrix: c must be positive");
    return delta_from_sizes(dataset.cluster_sizes(), residual_spectral_norm(dataset), c);
}

/**
 * Signed proximity margin of `point` for the ordered pair (r, s):
 * |(x − μ_s)·v| − |(x − μ_r)·v| with v the unit vector from μ_r to μ_s.
 * The (r, s) condition holds iff the margin is at least Δ_rs.
 */
inline double proximity_margin(std::span<const double> point, std::size_t r, const CenterSet& means, std::size_t s) {
    detail::require(r != s, "proximity_margin: r and s must differ");
    detail::require(r < means.k() && s < means.k(), "proximity_margin: cluster index out of range");
    const auto mu_r = means[r];
    const auto mu_s = means[s];
    const double len = distance(mu_r, mu_s);
    if (!(len > 0.0)) {
        throw ValidationError("proximity_margin: means " + std::to_string(r) + " and " + std::to_string(s) +
                              " coincide");
    }
    double along_r = 0.0;
    double along_s = 0.0;
    for (std::size_t j = 0; j < point.size(); ++j) {
        const double v = (mu_s[j] - mu_r[j]) / len;
        along_r += (point[j] - mu_r[j]) * v;
        along_s += (point[j] - mu_s[j]) * v;
    }
    return std::abs(along_s) - std::abs(along_r);
}

inline ProximityReport proximity_report(const Dataset& dataset, double c) {
    detail::require(c > 0.0, "proximity_report: c must be positive");
    const auto& labels = dataset.require_truth("proximity_report");
    const CenterSet means = true_means(dataset);
    const std::size_t k = dataset.k();

    ProximityReport report;
    report.c_constant = c;
    report.residual_norm = residual_spectral_norm(dataset);
    report.delta = delta_from_sizes(dataset.cluster_sizes(), report.residual_norm, c);

    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t s = r + 1; s < k; ++s) {
            if (!(distance(means[r], means[s]) > 0.0)) {
                throw ValidationError("proximity_report: true means " + std::to_string(r) + " and " +
                                      std::to_string(s) + " coincide");
            }
        }
    }

    const std::size_t n = dataset.n();
    report.margins.assign(n, std::numeric_limits<double>::infinity());
    report.good.assign(n, true);
    std::size_t good = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = labels[i];
        const auto x = dataset.points().row(i);
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < k; ++s) {
            if (s != r) {
                worst = std::min(worst, proximity_margin(x, r, means, s) - report.delta(r, s));
            }
        }
        report.margins[i] = worst;
        report.good[i] = worst >= 0.0;
        good += report.good[i] ? 1 : 0;
    }
    report.good_fraction = static_cast<double>(good) / static_cast<double>(n);
    return report;
}

/// ORSS separation: the optimal k-clustering costs at most ε times the optimal (k−1)-clustering.
inline bool orss_check(double epsilon, double opt_k, double opt_k_minus_1) {
    detail::require(opt_k >= 0.0 && opt_k_minus_1 >= 0.0, "orss_check: costs must be non-negative");
    detail::require(epsilon >= 0.0, "orss_check: epsilon must be non-negative");
    return opt_k <= epsilon * opt_k_minus_1;
}

/// Equal-width histogram of the finite margins.
struct MarginHistogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;
};

inline MarginHistogram margin_histogram(const std::vector<double>& margins, std::size_t bins = 32) {
    MarginHistogram h;
    h.counts.assign(bins, 0);
    bool any = false;
    for (double m : margins) {
        if (!std::isfinite(m)) {
            continue;
        }
        h.lo = any ? std::min(h.lo, m) : m;
        h.hi = any ? std::max(h.hi, m) : m;
        any = true;
    }
    if (!any) {
        return h;
    }
    const double width = h.hi > h.lo ? (h.hi - h.lo) / static_cast<double>(bins) : 1.0;
    for (double m : margins) {
        if (!std::isfinite(m)) {
            continue;
        }
        auto b = static_cast<std::size_t>((m - h.lo) / width);
        ++h.counts[std::min(b, bins - 1)];
    }
    return h;
}

inline nlohmann::json to_json(const ProximityReport& report) {
    nlohmann::json delta = nlohmann::json::array();
    for (std::size_t r = 0; r < report.delta.rows(); ++r) {
        delta.push_back(std::vector<double>(report.delta.row(r).begin(), report.delta.row(r).end()));
    }
    const auto hist = margin_histogram(report.margins);
    return {
        {"delta", delta},
        {"good_fraction", report.good_fraction},
        {"good_count", report.good_count()},
        {"n", report.margins.size()},
        {"c", report.c_constant},
        {"residual_norm", report.residual_norm},
        {"margin_histogram", {{"lo", hist.lo}, {"hi", hist.hi}, {"bins", hist.counts.size()}, {"counts", hist.counts}}},
    };
}

/// Per-point rows: index, label, min-margin, good.
inline void write_margins_csv(const std::filesystem::path& path, const ProximityReport& report, const Labels& labels) {
    auto out = io::open_for_write(path);
    out << "index,label,min_margin,good\n";
    for (std::size_t i = 0; i < report.margins.size(); ++i) {
        out << i << ',' << labels[i] << ',' << io::format_real(report.margins[i]) << ',' << (report.good[i] ? 1 : 0)
            << '\n';
    }
}

} // namespace proxclust

#endif
