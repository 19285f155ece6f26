// Command-line front end. Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "proxclust/proxclust.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace proxclust;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int cmd_generate(const fs::path& spec_path, const fs::path& out, std::optional<std::size_t> n_override) {
    const json spec = io::read_json(spec_path);
    Dataset data;
    json meta = {{"generator", spec}};
    if (spec.value("model", std::string("gaussian")) == "planted") {
        const auto p = planted_spec_from_json(spec);
        data = gen_planted_partition(p);
        meta["seed"] = p.seed;
    } else {
        const auto m = mixture_spec_from_json(spec);
        std::size_t n = 0;
        if (n_override) {
            n = *n_override;
        } else {
            detail::require(spec.contains("n"), "generate: mixture spec needs \"n\" (or pass --n)");
            n = spec.at("n").get<std::size_t>();
        }
        data = gen_mixture(m, n);
        meta["seed"] = m.seed;
        meta["generator"] = to_json(m);
        meta["generator"]["n"] = n;
    }
    io::write_dataset(out, data, meta);
    std::cout << "wrote " << data.n() << " x " << data.d() << " points to " << out.string() << '\n';
    return 0;
}

struct ClusterOptions {
    fs::path data;
    std::optional<fs::path> data_b;
    std::size_t k = 0;
    std::string algo = "cluster";
    fs::path out;
    std::uint64_t seed = 0;
    std::size_t max_iters = 200;
    std::optional<double> move_tol;
    std::optional<double> sigma;
    std::optional<double> c;
    bool components = false;
    bool dump_x = false;
};

int cmd_cluster(const ClusterOptions& opt) {
    const Algorithm algo = parse_algorithm(opt.algo);
    LloydConfig lloyd;
    lloyd.seed = opt.seed;
    lloyd.max_iters = opt.max_iters;
    lloyd.move_tol = opt.move_tol;
    lloyd.validate();

    Dataset data = io::read_dataset(opt.data, opt.k);
    json result = {{"algorithm", to_string(algo)}, {"k", opt.k}, {"seed", opt.seed}};
    RunTrace trace;
    switch (algo) {
    case Algorithm::cluster:
        trace = run_cluster(data, lloyd);
        break;
    case Algorithm::bounded: {
        detail::require(opt.sigma.has_value(), "cluster: --algo bounded needs --sigma");
        trace = run_bounded_variance(data, *opt.sigma, lloyd);
        break;
    }
    case Algorithm::boosted: {
        std::optional<BoostInputs> inputs;
        if (opt.data_b) {
            inputs = BoostInputs{data, io::read_dataset(*opt.data_b, opt.k)};
        } else {
            // Without a second sample, the two halves of the file serve as A and B.
            const std::size_t half = data.n() / 2;
            auto take = [&](std::size_t from) {
                DenseMatrix pts(half, data.d());
                std::optional<Labels> labels;
                if (data.has_truth()) {
                    labels.emplace(half);
                }
                for (std::size_t i = 0; i < half; ++i) {
                    const auto row = data.points().row(from + i);
                    std::copy(row.begin(), row.end(), pts.row(i).begin());
                    if (labels) {
                        (*labels)[i] = (*data.truth())[from + i];
                    }
                }
                return Dataset(std::move(pts), opt.k, std::move(labels));
            };
            detail::require(half >= opt.k, "cluster: too few points to split into two samples");
            inputs = BoostInputs{take(0), take(half)};
            result["split_halves"] = true;
        }
        BoostConfig boost;
        boost.use_components = opt.components;
        trace = boost_cluster(*inputs, boost, lloyd);
        if (inputs->sample_a.has_truth()) {
            const auto diag = boost_diagnostics(*inputs);
            io::write_json(opt.out / "boost_diagnostics.json", to_json(diag));
        }
        if (opt.dump_x) {
            write_matrix_binary(opt.out / "X.bin",
                                boost_matrix(inputs->sample_a.points(), inputs->sample_b.points()));
        }
        data = inputs->sample_a;
        break;
    }
    }

    write_trace_csv(opt.out / "trace.csv", trace);
    io::write_assignment_csv(opt.out / "assignment.csv", trace.assignment.labels, &trace.kept);
    io::write_matrix_csv(opt.out / "centers.csv", trace.centers.centers);

    result["n"] = data.n();
    result["kept"] = trace.kept.size();
    result["removed"] = trace.removed;
    result["iterations"] = trace.lloyd_iterations;
    result["converged"] = trace.converged;
    result["cost"] = trace.records.empty() ? 0.0 : trace.records.back().cost;
    if (data.has_truth()) {
        Labels kept_truth;
        for (std::size_t i : trace.kept) {
            kept_truth.push_back((*data.truth())[i]);
        }
        const auto eval = misclassification(trace.assignment, kept_truth, opt.k);
        result["misclassified"] = eval.misclassified + trace.removed.size();
        result["accuracy"] = 1.0 - static_cast<double>(eval.misclassified + trace.removed.size()) /
                                       static_cast<double>(data.n());
        result["matching"] = eval.matching;
    }
    io::write_json(opt.out / "result.json", result);
    std::cout << result.dump(2) << '\n';
    return 0;
}

int cmd_verify(const fs::path& data_path, double c, const fs::path& out, std::optional<fs::path> margins) {
    const Dataset data = io::read_dataset(data_path);
    const auto report = proximity_report(data, c);
    io::write_json(out, to_json(report));
    fs::path margins_path = margins.value_or(out.parent_path() / (out.stem().string() + "_margins.csv"));
    write_margins_csv(margins_path, report, *data.truth());
    std::cout << "good_fraction " << io::format_real(report.good_fraction) << " (" << report.good_count() << "/"
              << data.n() << ")\n";
    return 0;
}

int cmd_bruteforce(const fs::path& data_path, std::size_t k, std::optional<fs::path> out) {
    const Dataset data = io::read_dataset(data_path, k);
    const auto best = brute_force_kmeans(data.points(), k);
    json j = {{"k", k}, {"n", data.n()}, {"cost", best.cost}, {"labels", best.labels}};
    if (k >= 2) {
        const auto orss = measure_orss(data.points(), k);
        j["cost_k_minus_1"] = orss.opt_k_minus_1;
        j["orss_ratio"] = orss.ratio();
    }
    if (out) {
        io::write_json(*out, j);
    }
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_experiment(const fs::path& config_path, const fs::path& out) {
    const auto cfg = experiment_config_from_json(io::read_json(config_path), config_path.parent_path());
    const auto outcome = run_experiment(cfg, out);
    for (const auto& s : outcome.seeds) {
        if (!s.ok) {
            std::cerr << "seed " << s.seed << " failed: " << s.error << '\n';
        }
    }
    for (const auto& w : outcome.summary.at("warnings")) {
        std::cerr << "warning: " << w.get<std::string>() << '\n';
    }
    json brief = {{"succeeded", outcome.summary.at("succeeded")}, {"seeds", outcome.summary.at("seeds")}};
    if (outcome.summary.contains("accuracy")) {
        brief["accuracy"] = outcome.summary.at("accuracy");
    }
    std::cout << brief.dump(2) << '\n';
    return outcome.all_ok ? 0 : kExitRuntime;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral seeding + Lloyd clustering under the proximity condition"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    fs::path spec_path, out_csv;
    std::optional<std::size_t> gen_n;
    auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset from a spec JSON");
    gen->add_option("--spec", spec_path, "Generator spec JSON")->required();
    gen->add_option("--out", out_csv, "Output CSV (a .json sidecar is written next to it)")->required();
    gen->add_option("--n", gen_n, "Sample size, overriding the spec's n");

    ClusterOptions copt;
    auto* clu = app.add_subcommand("cluster", "Cluster a dataset CSV");
    clu->add_option("--data", copt.data, "Dataset CSV")->required();
    clu->add_option("--k", copt.k, "Number of clusters")->required()->check(CLI::PositiveNumber);
    clu->add_option("--algo", copt.algo, "cluster | bounded | boosted")
        ->check(CLI::IsMember({"cluster", "bounded", "boosted"}));
    clu->add_option("--out", copt.out, "Output directory")->required();
    clu->add_option("--seed", copt.seed, "Seed for the k-means seeding step");
    clu->add_option("--max-iters", copt.max_iters, "Lloyd iteration cap");
    clu->add_option("--move-tol", copt.move_tol, "Stop when no center moves farther than this");
    clu->add_option("--sigma", copt.sigma, "Variance bound for --algo bounded");
    clu->add_option("--data-b", copt.data_b, "Second independent sample for --algo boosted");
    clu->add_flag("--components", copt.components, "Boosted: per-component centering");
    clu->add_flag("--dump-x", copt.dump_x, "Boosted: write the embedding as X.bin + X.json");

    fs::path vdata, vout;
    double vc = 1.0;
    std::optional<fs::path> vmargins;
    auto* ver = app.add_subcommand("verify", "Proximity report against the dataset's labels");
    ver->add_option("--data", vdata, "Labelled dataset CSV")->required();
    ver->add_option("--c", vc, "Constant c in the separation threshold")->required();
    ver->add_option("--out", vout, "Report JSON")->required();
    ver->add_option("--margins", vmargins, "Per-point CSV (default <out stem>_margins.csv)");

    fs::path bdata;
    std::size_t bk = 0;
    std::optional<fs::path> bout;
    auto* bf = app.add_subcommand("bruteforce", "Exact k-means optimum for n <= 14, k <= 3");
    bf->add_option("--data", bdata, "Dataset CSV")->required();
    bf->add_option("--k", bk, "Number of clusters")->required()->check(CLI::PositiveNumber);
    bf->add_option("--out", bout, "Optional result JSON");

    fs::path ecfg, eout;
    auto* exp = app.add_subcommand("experiment", "Run a multi-seed experiment from a config JSON");
    exp->add_option("--config", ecfg, "Experiment config JSON")->required();
    exp->add_option("--out", eout, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*gen) {
            return cmd_generate(spec_path, out_csv, gen_n);
        }
        if (*clu) {
            return cmd_cluster(copt);
        }
        if (*ver) {
            return cmd_verify(vdata, vc, vout, vmargins);
        }
        if (*bf) {
            return cmd_bruteforce(bdata, bk, bout);
        }
        if (*exp) {
            return cmd_experiment(ecfg, eout);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitValidation;
}
