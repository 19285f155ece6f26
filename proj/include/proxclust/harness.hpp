#ifndef PROXCLUST_HARNESS_HPP
#define PROXCLUST_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "proxclust/boosting.hpp"
#include "proxclust/cluster.hpp"
#include "proxclust/error.hpp"
#include "proxclust/generators.hpp"
#include "proxclust/io.hpp"
#include "proxclust/matching.hpp"
#include "proxclust/model.hpp"
#include "proxclust/proximity.hpp"
#include "proxclust/version.hpp"

/**
 * @file harness.hpp
 *
 * @brief Evaluation against ground truth, exact k-means on tiny instances,
 * and the multi-seed experiment driver.
 */

namespace proxclust {

struct EvalResult {
    std::size_t misclassified = 0;
    double accuracy = 0.0;                 ///< 1 − misclassified / n
    std::vector<std::size_t> matching;     ///< predicted label -> true label
    double cost = 0.0;
};

/**
 * Fewest disagreements over all bijections between predicted and true
 * labels, found by a maximum-weight matching on the k x k confusion matrix.
 * `cost` is left at zero.
 */
inline EvalResult misclassification(const Labels& predicted, const Labels& truth, std::size_t k) {
    detail::require(predicted.size() == truth.size(), "misclassification: predicted has " +
                                                          std::to_string(predicted.size()) + " labels, truth " +
                                                          std::to_string(truth.size()));
    detail::require(k >= 1, "misclassification: k must be at least 1");
    DenseMatrix confusion(k, k);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        detail::require(predicted[i] < k && truth[i] < k, "misclassification: label out of range");
        confusion(predicted[i], truth[i]) += 1.0;
    }
    DenseMatrix cost(k, k);
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t t = 0; t < k; ++t) {
            cost(p, t) = -confusion(p, t);
        }
    }
    EvalResult out;
    out.matching = min_cost_matching(cost);
    std::size_t agree = 0;
    for (std::size_t p = 0; p < k; ++p) {
        agree += static_cast<std::size_t>(confusion(p, out.matching[p]));
    }
    out.misclassified = truth.size() - agree;
    out.accuracy = truth.empty() ? 1.0 : 1.0 - static_cast<double>(out.misclassified) / static_cast<double>(truth.size());
    return out;
}

inline EvalResult misclassification(const Assignment& predicted, const Labels& truth, std::size_t k) {
    return misclassification(predicted.labels, truth, k);
}

struct BruteForceResult {
    double cost = 0.0;
    Labels labels;
};

/// Σ_r Σ_{i∈S_r} |x_i − mean(S_r)|² for a labeling; empty clusters contribute nothing.
inline double partition_cost(const DenseMatrix& points, const Labels& labels, std::size_t k) {
    const auto acc = detail::accumulate(points, labels, k);
    double total = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        total += dot(points.row(i), points.row(i));
    }
    for (std::size_t r = 0; r < k; ++r) {
        if (acc.counts[r] > 0) {
            total -= dot(acc.sums.row(r), acc.sums.row(r)) / static_cast<double>(acc.counts[r]);
        }
    }
    return std::max(total, 0.0);
}

/**
 * Exact k-means optimum by enumerating every labeling with point 0 fixed to
 * label 0. Limited to n ≤ max_n and k ≤ 3.
 */
inline BruteForceResult brute_force_kmeans(const DenseMatrix& points, std::size_t k, std::size_t max_n = 14) {
    detail::require_finite(points, "brute_force_kmeans");
    detail::require(k >= 1 && k <= 3, "brute_force_kmeans: k must be in [1, 3]");
    detail::require(points.rows() >= k, "brute_force_kmeans: fewer points than clusters");
    detail::require(points.rows() <= max_n, "brute_force_kmeans: n=" + std::to_string(points.rows()) +
                                                " exceeds the exhaustive limit " + std::to_string(max_n));
    const std::size_t n = points.rows();
    Labels labels(n, 0);
    BruteForceResult best{std::numeric_limits<double>::infinity(), labels};
    while (true) {
        const double c = partition_cost(points, labels, k);
        if (c < best.cost) {
            best.cost = c;
            best.labels = labels;
        }
        std::size_t pos = 1;
        while (pos < n && labels[pos] + 1 == k) {
            labels[pos] = 0;
            ++pos;
        }
        if (pos >= n) {
            break;
        }
        ++labels[pos];
    }
    return best;
}

/// Cost of run_cluster's final centers over the exact optimum.
inline double ptas_ratio(const Dataset& dataset, const LloydConfig& lloyd) {
    const auto exact = brute_force_kmeans(dataset.points(), dataset.k());
    const auto trace = run_cluster(dataset, lloyd);
    const double achieved = kmeans_cost(dataset.points(), trace.centers);
    if (exact.cost == 0.0) {
        return achieved == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    return achieved / exact.cost;
}

/// Optimal k- and (k−1)-means costs; `certified` is false when they are heuristic upper bounds.
struct OrssMeasurement {
    double opt_k = 0.0;
    double opt_k_minus_1 = 0.0;
    bool certified = true;

    double ratio() const { return opt_k_minus_1 > 0.0 ? opt_k / opt_k_minus_1 : std::numeric_limits<double>::infinity(); }
    bool satisfies(double epsilon) const { return orss_check(epsilon, opt_k, opt_k_minus_1); }
};

namespace detail {

/// Best cost over several seeded constant-factor solutions.
inline double heuristic_kmeans_cost(const DenseMatrix& points, std::size_t k, std::size_t restarts = 10) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < restarts; ++s) {
        best = std::min(best, kmeans_cost(points, seed_centers(points, k, s)));
    }
    return best;
}

} // namespace detail

inline OrssMeasurement measure_orss(const DenseMatrix& points, std::size_t k, std::size_t max_n = 14) {
    detail::require(k >= 2, "measure_orss: k must be at least 2");
    OrssMeasurement m;
    if (points.rows() <= max_n && k <= 3) {
        m.opt_k = brute_force_kmeans(points, k, max_n).cost;
        m.opt_k_minus_1 = brute_force_kmeans(points, k - 1, max_n).cost;
        return m;
    }
    m.certified = false;
    m.opt_k = detail::heuristic_kmeans_cost(points, k);
    m.opt_k_minus_1 = detail::heuristic_kmeans_cost(points, k - 1);
    return m;
}

// Experiments ----------------------------------------------------------------

enum class Algorithm { cluster, bounded, boosted };

inline Algorithm parse_algorithm(const std::string& name) {
    if (name == "cluster") {
        return Algorithm::cluster;
    }
    if (name == "bounded" || name == "bounded-variance") {
        return Algorithm::bounded;
    }
    if (name == "boosted") {
        return Algorithm::boosted;
    }
    throw ValidationError("unknown algorithm '" + name + "' (expected cluster, bounded or boosted)");
}

inline const char* to_string(Algorithm a) noexcept {
    switch (a) {
    case Algorithm::cluster:
        return "cluster";
    case Algorithm::bounded:
        return "bounded";
    case Algorithm::boosted:
        return "boosted";
    }
    return "unknown";
}

struct ExperimentConfig {
    nlohmann::json generator;  ///< mixture or planted spec; its seed is replaced per run
    std::size_t n = 0;         ///< sample size for mixtures; planted specs carry their own
    Algorithm algorithm = Algorithm::cluster;
    double c = 1.0;
    LloydConfig lloyd;
    std::optional<double> sigma;  ///< bounded-variance σ; defaults to the generator's
    BoostConfig boost;
    std::vector<std::uint64_t> seeds;
    std::size_t threads = 0;  ///< 0 means hardware concurrency
    bool write_data = false;
    nlohmann::json source;    ///< config as read, for hashing

    bool planted() const { return generator.value("model", std::string("gaussian")) == "planted"; }

    void validate() const {
        detail::require(!seeds.empty(), "experiment config: seeds list is empty");
        detail::require(c > 0.0, "experiment config: c must be positive");
        lloyd.validate();
        boost.validate();
        if (planted()) {
            planted_spec_from_json(generator);
            detail::require(algorithm != Algorithm::boosted,
                            "experiment config: boosted runs need a mixture generator");
        } else {
            const auto spec = mixture_spec_from_json(generator);
            detail::require(n >= spec.k(), "experiment config: n must be at least k");
        }
        if (algorithm == Algorithm::boosted) {
            detail::require(n <= kMaxBoostPoints, "experiment config: boosted n=" + std::to_string(n) +
                                                      " exceeds the dense embedding cap of " +
                                                      std::to_string(kMaxBoostPoints));
        }
        if (algorithm == Algorithm::bounded) {
            const double s = sigma.value_or(planted() ? 0.0 : mixture_spec_from_json(generator).sigma);
            detail::require(s > 0.0, "experiment config: bounded runs need sigma > 0");
        }
    }
};

/**
 * Experiment config JSON:
 *   generator  object, or path to a spec file relative to `base_dir`
 *   n          sample size (mixtures)
 *   algorithm  "cluster" | "bounded" | "boosted"
 *   c, seeds, threads, sigma, write_data
 *   lloyd      {max_iters, move_tol}
 *   boost      {use_components, edge_threshold, sentinel}
 */
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    try {
        ExperimentConfig cfg;
        cfg.source = j;
        const auto& gen = j.at("generator");
        if (gen.is_string()) {
            auto p = std::filesystem::path(gen.get<std::string>());
            if (p.is_relative()) {
                p = base_dir / p;
            }
            cfg.generator = io::read_json(p);
        } else {
            cfg.generator = gen;
        }
        cfg.n = j.value("n", std::size_t{0});
        cfg.algorithm = parse_algorithm(j.value("algorithm", std::string("cluster")));
        cfg.c = j.value("c", 1.0);
        if (j.contains("lloyd")) {
            const auto& l = j.at("lloyd");
            cfg.lloyd.max_iters = l.value("max_iters", cfg.lloyd.max_iters);
            if (l.contains("move_tol")) {
                cfg.lloyd.move_tol = l.at("move_tol").get<double>();
            }
        }
        if (j.contains("sigma")) {
            cfg.sigma = j.at("sigma").get<double>();
        }
        if (j.contains("boost")) {
            const auto& b = j.at("boost");
            cfg.boost.use_components = b.value("use_components", false);
            if (b.contains("edge_threshold")) {
                cfg.boost.edge_threshold = b.at("edge_threshold").get<double>();
            }
            if (b.contains("sentinel")) {
                cfg.boost.sentinel = b.at("sentinel").get<double>();
            }
        }
        cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        cfg.threads = j.value("threads", std::size_t{0});
        cfg.write_data = j.value("write_data", false);
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("experiment config: ") + e.what());
    }
}

/// FNV-1a 64 of the compact JSON dump (keys sorted), as 16 hex digits.
inline std::string config_hash(const nlohmann::json& j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Second-sample seed for boosted runs, distinct from the first sample's stream.
inline std::uint64_t companion_seed(std::uint64_t seed) { return seed ^ 0xb5ad4eceda1ce2a9ULL; }

inline Dataset generate_for_seed(const nlohmann::json& generator, std::size_t n, std::uint64_t seed) {
    if (generator.value("model", std::string("gaussian")) == "planted") {
        auto spec = planted_spec_from_json(generator);
        spec.seed = seed;
        return gen_planted_partition(spec);
    }
    auto spec = mixture_spec_from_json(generator);
    spec.seed = seed;
    return gen_mixture(spec, n);
}

struct SeedResult {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    EvalResult eval;
    std::size_t n = 0;
    std::size_t kept = 0;
    std::size_t iterations = 0;
    bool converged = false;
    std::optional<double> good_fraction;
    std::optional<ContractionStats> contraction;
    nlohmann::json extra = nlohmann::json::object();
};

inline constexpr double kContractionRatio = 0.75;
inline constexpr double kContractionFloor = 1e-9;

/// One seed of an experiment; writes its files under `dir`.
inline SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir) {
    SeedResult res;
    res.seed = seed;
    LloydConfig lloyd = cfg.lloyd;
    lloyd.seed = seed;

    const Dataset data = generate_for_seed(cfg.generator, cfg.n, seed);
    if (cfg.write_data) {
        io::write_dataset(dir / "data.csv", data, {{"seed", seed}});
    }
    res.n = data.n();
    const auto& truth = data.require_truth("experiment");

    RunTrace trace;
    switch (cfg.algorithm) {
    case Algorithm::cluster:
        trace = run_cluster(data, lloyd);
        break;
    case Algorithm::bounded: {
        const double sigma = cfg.sigma.value_or(mixture_spec_from_json(cfg.generator).sigma);
        trace = run_bounded_variance(data, sigma, lloyd);
        break;
    }
    case Algorithm::boosted: {
        BoostInputs inputs{data, generate_for_seed(cfg.generator, cfg.n, companion_seed(seed))};
        trace = boost_cluster(inputs, cfg.boost, lloyd);
        const auto diag = boost_diagnostics(inputs);
        res.extra["boost"] = to_json(diag);
        io::write_json(dir / "boost_diagnostics.json", to_json(diag));
        break;
    }
    }

    Labels kept_truth(trace.kept.size());
    DenseMatrix kept_points(trace.kept.size(), data.d());
    for (std::size_t j = 0; j < trace.kept.size(); ++j) {
        kept_truth[j] = truth[trace.kept[j]];
        const auto p = data.points().row(trace.kept[j]);
        std::copy(p.begin(), p.end(), kept_points.row(j).begin());
    }
    res.kept = trace.kept.size();
    const EvalResult on_kept = misclassification(trace.assignment, kept_truth, data.k());
    res.eval = on_kept;
    // Pruned points count as misclassified.
    res.eval.misclassified = on_kept.misclassified + (data.n() - trace.kept.size());
    res.eval.accuracy = 1.0 - static_cast<double>(res.eval.misclassified) / static_cast<double>(data.n());
    res.eval.cost = kmeans_cost(kept_points, trace.centers);
    res.iterations = trace.lloyd_iterations;
    res.converged = trace.converged;

    const auto report = proximity_report(data, cfg.c);
    res.good_fraction = report.good_fraction;
    io::write_json(dir / "proximity.json", to_json(report));

    if (cfg.algorithm != Algorithm::bounded && !trace.records.empty() && !trace.records.front().center_errors.empty()) {
        const auto ct = contraction_trace(trace, data);
        res.contraction = contraction_stats(ct.values, kContractionRatio, kContractionFloor);
        res.extra["contraction_values"] = ct.values;
    }
    if (cfg.algorithm == Algorithm::bounded) {
        res.extra["removed"] = trace.removed.size();
        res.extra["kept_accuracy"] = on_kept.accuracy;
    }

    write_trace_csv(dir / "trace.csv", trace);
    io::write_assignment_csv(dir / "assignment.csv", trace.assignment.labels, &trace.kept);
    res.ok = true;
    return res;
}

inline nlohmann::json to_json(const SeedResult& r) {
    nlohmann::json j = {{"seed", r.seed}, {"ok", r.ok}};
    if (!r.ok) {
        j["error"] = r.error;
        return j;
    }
    j["n"] = r.n;
    j["kept"] = r.kept;
    j["misclassified"] = r.eval.misclassified;
    j["accuracy"] = r.eval.accuracy;
    j["cost"] = r.eval.cost;
    j["matching"] = r.eval.matching;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    if (r.good_fraction) {
        j["good_fraction"] = *r.good_fraction;
    }
    if (r.contraction) {
        j["contraction"] = {{"steps_to_floor", r.contraction->steps_to_floor},
                            {"contracting_steps", r.contraction->contracting_steps},
                            {"worst_ratio", r.contraction->worst_ratio},
                            {"reached_floor", r.contraction->reached_floor}};
    }
    j.update(r.extra);
    return j;
}

struct ExperimentOutcome {
    nlohmann::json summary;
    std::vector<SeedResult> seeds;
    bool all_ok = true;
};

namespace detail {

inline std::vector<std::string> experiment_warnings(const ExperimentConfig& cfg) {
    std::vector<std::string> warnings;
    if (cfg.planted()) {
        const auto spec = planted_spec_from_json(cfg.generator);
        const double n = static_cast<double>(spec.n());
        const double p_max = *std::max_element(spec.probabilities.entries().begin(), spec.probabilities.entries().end());
        if (std::sqrt(p_max) < 3.0 * std::log(n) / n) {
            warnings.push_back("planted model: sqrt(max P) is below 3 log n / n; density too low for the recovery regime");
        }
    }
    return warnings;
}

} // namespace detail

/**
 * Runs every seed (in parallel), writing `seed_<s>/` per seed plus
 * `results.csv` and `summary.json` under `out_dir`. Failed seeds are
 * recorded and make `all_ok` false; the config is validated before anything
 * is written.
 */
inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);

    ExperimentOutcome outcome;
    outcome.seeds.resize(cfg.seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
            const auto seed = cfg.seeds[i];
            try {
                outcome.seeds[i] = run_seed(cfg, seed, out_dir / ("seed_" + std::to_string(seed)));
            } catch (const std::exception& e) {
                outcome.seeds[i].seed = seed;
                outcome.seeds[i].ok = false;
                outcome.seeds[i].error = e.what();
            }
        }
    };
    std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, cfg.seeds.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t + 1 < threads; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }

    auto csv = io::open_for_write(out_dir / "results.csv");
    csv << "seed,ok,n,kept,misclassified,accuracy,cost,iterations,good_fraction\n";
    nlohmann::json rows = nlohmann::json::array();
    std::vector<std::uint64_t> failed;
    double acc_sum = 0.0;
    double acc_min = std::numeric_limits<double>::infinity();
    double acc_max = -std::numeric_limits<double>::infinity();
    std::size_t ok_count = 0;
    std::size_t with_contraction = 0;
    std::size_t two_or_more = 0;
    double steps_sum = 0.0;
    double worst_ratio = 0.0;
    for (const auto& r : outcome.seeds) {
        rows.push_back(to_json(r));
        if (!r.ok) {
            failed.push_back(r.seed);
            outcome.all_ok = false;
            csv << r.seed << ",0,,,,,,,\n";
            continue;
        }
        csv << r.seed << ",1," << r.n << ',' << r.kept << ',' << r.eval.misclassified << ','
            << io::format_real(r.eval.accuracy) << ',' << io::format_real(r.eval.cost) << ',' << r.iterations << ','
            << (r.good_fraction ? io::format_real(*r.good_fraction) : std::string()) << '\n';
        ++ok_count;
        acc_sum += r.eval.accuracy;
        acc_min = std::min(acc_min, r.eval.accuracy);
        acc_max = std::max(acc_max, r.eval.accuracy);
        if (r.contraction) {
            ++with_contraction;
            steps_sum += static_cast<double>(r.contraction->contracting_steps);
            two_or_more += r.contraction->contracting_steps >= 2 ? 1 : 0;
            worst_ratio = std::max(worst_ratio, r.contraction->worst_ratio);
        }
    }

    nlohmann::json summary = {
        {"version", kVersion},
        {"config_hash", config_hash(cfg.source)},
        {"algorithm", to_string(cfg.algorithm)},
        {"seeds", cfg.seeds.size()},
        {"succeeded", ok_count},
        {"failed", failed},
        {"warnings", detail::experiment_warnings(cfg)},
        {"per_seed", rows},
    };
    if (ok_count > 0) {
        summary["accuracy"] = {{"mean", acc_sum / static_cast<double>(ok_count)}, {"min", acc_min}, {"max", acc_max}};
    }
    if (with_contraction > 0) {
        summary["contraction"] = {{"ratio", kContractionRatio},
                                  {"floor", kContractionFloor},
                                  {"mean_contracting_steps", steps_sum / static_cast<double>(with_contraction)},
                                  {"seeds_with_two_or_more", two_or_more},
                                  {"max_step_ratio", worst_ratio}};
    }
    io::write_json(out_dir / "summary.json", summary);
    outcome.summary = std::move(summary);
    return outcome;
}

} // namespace proxclust

#endif
