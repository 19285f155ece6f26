#ifndef PROXCLUST_GENERATORS_HPP
#define PROXCLUST_GENERATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "proxclust/error.hpp"
#include "proxclust/matrix.hpp"
#include "proxclust/model.hpp"

/**
 * @file generators.hpp
 *
 * @brief Synthetic data: spherical Gaussian mixtures, power-law mixtures and
 * the planted partition model. Every generator draws from a single
 * std::mt19937_64 stream seeded from its spec, so the same spec produces a
 * bit-identical dataset.
 */

namespace proxclust {

enum class NoiseFamily { gaussian, powerlaw };

/// Mixture of k components with means μ_r, weights w_r and noise scale σ.
struct MixtureSpec {
    std::vector<double> weights;
    DenseMatrix means;  ///< k x d
    double sigma = 1.0;
    NoiseFamily family = NoiseFamily::gaussian;
    double tail_gamma = 4.0;  ///< power-law tail exponent; unused for Gaussians
    std::uint64_t seed = 0;

    std::size_t k() const noexcept { return means.rows(); }
    std::size_t d() const noexcept { return means.cols(); }
    double w_min() const { return *std::min_element(weights.begin(), weights.end()); }

    void validate() const {
        detail::require(!means.empty(), "MixtureSpec: no means");
        detail::require(weights.size() == k(), "MixtureSpec: need one weight per mean");
        double total = 0.0;
        for (double w : weights) {
            detail::require(w > 0.0, "MixtureSpec: weights must be positive");
            total += w;
        }
        detail::require(std::abs(total - 1.0) <= 1e-12, "MixtureSpec: weights must sum to 1");
        detail::require(std::isfinite(sigma) && sigma >= 0.0, "MixtureSpec: sigma must be finite and >= 0");
        detail::require(means.all_finite(), "MixtureSpec: means must be finite");
        for (std::size_t r = 0; r < k(); ++r) {
            for (std::size_t s = r + 1; s < k(); ++s) {
                detail::require(squared_distance(means.row(r), means.row(s)) > 0.0,
                                "MixtureSpec: means " + std::to_string(r) + " and " + std::to_string(s) +
                                    " coincide");
            }
        }
        if (family == NoiseFamily::powerlaw) {
            detail::require(tail_gamma >= 2.0, "MixtureSpec: tail_gamma must be >= 2");
        }
    }
};

/// Planted partition: k groups of given sizes, edge probabilities P (k x k).
struct PlantedSpec {
    std::vector<std::size_t> group_sizes;
    DenseMatrix probabilities;
    std::uint64_t seed = 0;
    bool symmetric = false;  ///< undirected graph; breaks row independence

    std::size_t k() const noexcept { return group_sizes.size(); }
    std::size_t n() const { return std::accumulate(group_sizes.begin(), group_sizes.end(), std::size_t{0}); }

    void validate() const {
        detail::require(!group_sizes.empty(), "PlantedSpec: no groups");
        for (std::size_t s : group_sizes) {
            detail::require(s > 0, "PlantedSpec: group sizes must be positive");
        }
        detail::require(probabilities.rows() == k() && probabilities.cols() == k(), "PlantedSpec: P must be k x k");
        for (double p : probabilities.entries()) {
            detail::require(p >= 0.0 && p <= 1.0, "PlantedSpec: probabilities must lie in [0, 1]");
        }
        if (symmetric) {
            for (std::size_t r = 0; r < k(); ++r) {
                for (std::size_t s = 0; s < k(); ++s) {
                    detail::require(probabilities(r, s) == probabilities(s, r),
                                    "PlantedSpec: symmetric mode needs a symmetric P");
                }
            }
        }
    }
};

/**
 * k means on a regular simplex with the given pairwise distance, centered at
 * the origin and embedded in the first k−1 of d coordinates.
 */
inline DenseMatrix place_means_simplex(std::size_t k, std::size_t d, double pairwise_distance) {
    detail::require(k >= 1, "place_means_simplex: k must be at least 1");
    detail::require(d + 1 >= k, "place_means_simplex: need d >= k-1 (d=" + std::to_string(d) +
                                    ", k=" + std::to_string(k) + ")");
    detail::require(d >= 1, "place_means_simplex: d must be at least 1");
    // Vertex i is (e_i − 1/k)·scale expressed in a Helmert basis of the
    // sum-zero hyperplane; |e_i − e_j| = √2, so scale = D/√2.
    const double scale = pairwise_distance / std::sqrt(2.0);
    DenseMatrix means(k, d);
    for (std::size_t j = 1; j < k; ++j) {
        const double norm_j = std::sqrt(static_cast<double>(j * (j + 1)));
        for (std::size_t i = 0; i < j; ++i) {
            means(i, j - 1) = -scale / norm_j;
        }
        means(j, j - 1) = scale * static_cast<double>(j) / norm_j;
    }
    return means;
}

/// kσ/√w_min, the unit in which experiments dial mean separation.
inline double separation_unit(std::size_t k, double sigma, double w_min) {
    return static_cast<double>(k) * sigma / std::sqrt(w_min);
}

namespace detail {

inline void check_all_components_present(const Labels& labels, std::size_t k, std::size_t n) {
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t l : labels) {
        ++counts[l];
    }
    for (std::size_t r = 0; r < k; ++r) {
        if (counts[r] == 0) {
            throw RuntimeFailure("mixture sample of n=" + std::to_string(n) + " drew no points from component " +
                                 std::to_string(r) + "; increase n or the component weight");
        }
    }
}

/// Pareto scale giving variance σ² (γ > 2) while keeping P[|x| > σt] ≤ t^−γ.
inline double pareto_scale(double sigma, double tail_gamma) {
    if (tail_gamma > 2.0) {
        return sigma * std::sqrt((tail_gamma - 2.0) / tail_gamma);
    }
    return sigma;
}

} // namespace detail

/// Component r with probability w_r, then μ_r plus N(0, σ²) per coordinate.
inline Dataset gen_gaussian_mixture(const MixtureSpec& spec, std::size_t n) {
    spec.validate();
    detail::require(spec.family == NoiseFamily::gaussian, "gen_gaussian_mixture: spec family is not gaussian");
    detail::require(n >= spec.k(), "gen_gaussian_mixture: n must be at least k");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Labels labels(n);
    DenseMatrix points(n, spec.d());
    std::discrete_distribution<std::size_t> pick(spec.weights.begin(), spec.weights.end());
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = pick(rng);
        const auto mu = spec.means.row(labels[i]);
        auto p = points.row(i);
        for (std::size_t j = 0; j < spec.d(); ++j) {
            p[j] = mu[j] + spec.sigma * noise(rng);
        }
    }
    detail::check_all_components_present(labels, spec.k(), n);
    return Dataset(std::move(points), spec.k(), std::move(labels));
}

/**
 * Component r with probability w_r, then μ_r plus independent symmetric
 * Pareto noise per coordinate: magnitude m₀·U^(−1/γ), random sign. The
 * scale m₀ = σ√((γ−2)/γ) gives per-coordinate variance σ² and keeps the
 * coordinate tail P[|x| > σt] at (m₀/σt)^γ ≤ t^−γ. The directional bound for
 * general unit vectors is validated by Monte-Carlo tests, not proven.
 */
inline Dataset gen_powerlaw_mixture(const MixtureSpec& spec, std::size_t n) {
    spec.validate();
    detail::require(spec.family == NoiseFamily::powerlaw, "gen_powerlaw_mixture: spec family is not powerlaw");
    detail::require(n >= spec.k(), "gen_powerlaw_mixture: n must be at least k");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const double m0 = detail::pareto_scale(spec.sigma, spec.tail_gamma);
    const double inv_gamma = 1.0 / spec.tail_gamma;
    Labels labels(n);
    DenseMatrix points(n, spec.d());
    std::discrete_distribution<std::size_t> pick(spec.weights.begin(), spec.weights.end());
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = pick(rng);
        const auto mu = spec.means.row(labels[i]);
        auto p = points.row(i);
        for (std::size_t j = 0; j < spec.d(); ++j) {
            const double u = 1.0 - unif(rng);  // (0, 1]
            const double magnitude = m0 * std::pow(u, -inv_gamma);
            p[j] = mu[j] + (coin(rng) ? magnitude : -magnitude);
        }
    }
    detail::check_all_components_present(labels, spec.k(), n);
    return Dataset(std::move(points), spec.k(), std::move(labels));
}

inline Dataset gen_mixture(const MixtureSpec& spec, std::size_t n) {
    return spec.family == NoiseFamily::gaussian ? gen_gaussian_mixture(spec, n) : gen_powerlaw_mixture(spec, n);
}

/**
 * Points in {0,1}^n: vertex u of group ψ(u) is adjacent to a point of group r
 * with probability P[r][ψ(u)]. Groups occupy contiguous index blocks.
 */
inline Dataset gen_planted_partition(const PlantedSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n();
    Labels group(n);
    std::size_t at = 0;
    for (std::size_t r = 0; r < spec.k(); ++r) {
        for (std::size_t c = 0; c < spec.group_sizes[r]; ++c) {
            group[at++] = r;
        }
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    DenseMatrix points(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t u = spec.symmetric ? i : 0; u < n; ++u) {
            const double p = spec.probabilities(group[i], group[u]);
            const double bit = unif(rng) < p ? 1.0 : 0.0;
            points(i, u) = bit;
            if (spec.symmetric) {
                points(u, i) = bit;
            }
        }
    }
    return Dataset(std::move(points), spec.k(), std::move(group));
}

// JSON spec files ----------------------------------------------------------

/**
 * Mixture spec JSON. Means are given either explicitly (`means`, k rows) or
 * placed on a simplex from `d` plus `separation` (absolute pairwise distance)
 * or `separation_multiple` (in units of kσ/√w_min). Weights default to
 * uniform.
 */
inline MixtureSpec mixture_spec_from_json(const nlohmann::json& j) {
    try {
        MixtureSpec spec;
        const std::string model = j.value("model", std::string("gaussian"));
        if (model == "gaussian") {
            spec.family = NoiseFamily::gaussian;
        } else if (model == "powerlaw") {
            spec.family = NoiseFamily::powerlaw;
            spec.tail_gamma = j.value("tail_gamma", 4.0);
        } else {
            throw ValidationError("mixture spec: unknown model '" + model + "'");
        }
        spec.sigma = j.value("sigma", 1.0);
        spec.seed = j.value("seed", std::uint64_t{0});
        std::size_t k = 0;
        if (j.contains("means")) {
            spec.means = DenseMatrix::from_rows(j.at("means").get<std::vector<std::vector<double>>>());
            k = spec.means.rows();
        } else {
            k = j.at("k").get<std::size_t>();
        }
        if (j.contains("weights")) {
            spec.weights = j.at("weights").get<std::vector<double>>();
        } else {
            spec.weights.assign(k, 1.0 / static_cast<double>(k));
        }
        if (!j.contains("means")) {
            detail::require(spec.weights.size() == k, "mixture spec: need one weight per component");
            const std::size_t d = j.at("d").get<std::size_t>();
            double distance = 0.0;
            if (j.contains("separation")) {
                distance = j.at("separation").get<double>();
            } else {
                const double w_min = *std::min_element(spec.weights.begin(), spec.weights.end());
                distance = j.at("separation_multiple").get<double>() * separation_unit(k, spec.sigma, w_min);
            }
            spec.means = place_means_simplex(k, d, distance);
        }
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("mixture spec: ") + e.what());
    }
}

inline PlantedSpec planted_spec_from_json(const nlohmann::json& j) {
    try {
        PlantedSpec spec;
        spec.group_sizes = j.at("group_sizes").get<std::vector<std::size_t>>();
        spec.probabilities = DenseMatrix::from_rows(j.at("P").get<std::vector<std::vector<double>>>());
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.symmetric = j.value("symmetric", false);
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("planted spec: ") + e.what());
    }
}

inline nlohmann::json to_json(const MixtureSpec& spec) {
    std::vector<std::vector<double>> means;
    for (std::size_t r = 0; r < spec.k(); ++r) {
        means.emplace_back(spec.means.row(r).begin(), spec.means.row(r).end());
    }
    nlohmann::json j = {{"model", spec.family == NoiseFamily::gaussian ? "gaussian" : "powerlaw"},
                        {"k", spec.k()},
                        {"d", spec.d()},
                        {"weights", spec.weights},
                        {"means", means},
                        {"sigma", spec.sigma},
                        {"seed", spec.seed}};
    if (spec.family == NoiseFamily::powerlaw) {
        j["tail_gamma"] = spec.tail_gamma;
    }
    return j;
}

inline nlohmann::json to_json(const PlantedSpec& spec) {
    std::vector<std::vector<double>> p;
    for (std::size_t r = 0; r < spec.k(); ++r) {
        p.emplace_back(spec.probabilities.row(r).begin(), spec.probabilities.row(r).end());
    }
    return {{"model", "planted"},
            {"k", spec.k()},
            {"group_sizes", spec.group_sizes},
            {"P", p},
            {"seed", spec.seed},
            {"symmetric", spec.symmetric}};
}

} // namespace proxclust

#endif
