// Command-line front end: run, sweep-alpha, sweep-inducing, reliability.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpd/errors.hpp"
#include "gpd/experiment.hpp"

namespace {

struct FlagSpec {
    const char* flag;
    const char* key;
    const char* help;
};

constexpr FlagSpec kCommonFlags[] = {
    {"--dataset", "dataset", "CSV path or synth:<sinusoid|step>:<n>[:<seed>]"},
    {"--label-column", "label_column", "name of the label column (default: last)"},
    {"--method", "method", "gpd, gpr, gpr_platt or laplace_gpc"},
    {"--inducing", "inducing", "number of inducing points or 'exact'"},
    {"--alpha-eps", "alpha_eps", "Dirichlet pseudo-count or 'auto'"},
    {"--alpha-grid", "alpha_grid", "comma-separated pseudo-counts searched by 'auto' and sweep-alpha"},
    {"--replicates", "replicates", "number of random splits"},
    {"--mc-samples", "mc_samples", "Monte-Carlo samples per test point"},
    {"--bins", "bins", "confidence bins"},
    {"--seed", "seed", "base seed"},
    {"--out", "out", "output directory"},
    {"--test-fraction", "test_fraction", "share of each dataset held out for testing"},
    {"--calibration-fraction", "calibration_fraction", "share of the training part held out for Platt scaling"},
    {"--restarts", "restarts", "optimizer restarts"},
    {"--max-iterations", "max_iterations", "optimizer iterations per restart"},
    {"--min-lengthscale-factor", "min_lengthscale_factor", "lengthscale floor as a multiple of the median distance (0: none)"},
    {"--band-quantile", "band_quantile", "central mass of the reliability band"},
    {"--m-list", "inducing_list", "comma-separated inducing counts for sweep-inducing"},
};

struct Verb {
    CLI::App* app = nullptr;
    std::string config_path;
    std::map<std::string, std::string> values;  // key -> flag value
};

void add_flags(Verb& v) {
    v.app->add_option("--config", v.config_path, "key = value configuration file");
    for (const auto& f : kCommonFlags) v.app->add_option(f.flag, v.values[f.key], f.help);
}

gpd::ExperimentConfig resolve(const Verb& v) {
    gpd::ExperimentConfig config;
    if (!v.config_path.empty()) config = gpd::load_config(v.config_path);
    for (const auto& f : kCommonFlags) {
        if (v.app->count(f.flag) > 0) gpd::set_config_value(config, f.key, v.values.at(f.key));
    }
    config.validate();
    return config;
}

void report_paths(const std::vector<std::string>& paths) {
    for (const auto& p : paths) std::cout << p << "\n";
}

int run_verb(const Verb& v, bool reliability) {
    const gpd::ExperimentConfig config = resolve(v);
    const gpd::Dataset data = gpd::load_dataset(config);
    const gpd::RunRecord record = gpd::run_experiment(config, data, {reliability});
    report_paths(gpd::write_run_outputs(record));
    for (const auto& r : record.replicates) {
        if (!r.ok) std::cerr << "replicate " << r.index << " failed: " << r.error << "\n";
    }
    if (record.succeeded() == 0) {
        std::cerr << "all replicates failed\n";
        return 1;
    }
    std::printf("%d/%d replicates succeeded\n", record.succeeded(), config.replicates);
    return 0;
}

int sweep_alpha_verb(const Verb& v) {
    const gpd::ExperimentConfig config = resolve(v);
    const gpd::Dataset data = gpd::load_dataset(config);
    const auto rows = gpd::sweep_alpha_eps(config, data, config.alpha_grid);
    const std::string path =
        (std::filesystem::path(config.out) / ("sweep_alpha_" + gpd::config_hash(config) + ".csv")).string();
    gpd::write_atomic(path, gpd::alpha_sweep_csv(rows));
    report_paths({path});
    for (const auto& r : rows) {
        if (std::isfinite(r.train_mnll)) return 0;
    }
    std::cerr << "every grid point failed\n";
    return 1;
}

int sweep_inducing_verb(const Verb& v) {
    const gpd::ExperimentConfig config = resolve(v);
    const gpd::Dataset data = gpd::load_dataset(config);
    const auto rows = gpd::sweep_inducing(config, data, config.inducing_list);
    const std::string path =
        (std::filesystem::path(config.out) / ("sweep_inducing_" + gpd::config_hash(config) + ".csv")).string();
    gpd::write_atomic(path, gpd::inducing_sweep_csv(rows));
    report_paths({path});
    for (const auto& r : rows) {
        if (std::isfinite(r.error_rate)) return 0;
    }
    std::cerr << "every inducing count failed\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dirichlet-based Gaussian process classification experiments"};
    app.require_subcommand(1);
    Verb run, sweep_alpha, sweep_inducing, reliability;
    run.app = app.add_subcommand("run", "fit and evaluate one method across replicates");
    sweep_alpha.app = app.add_subcommand("sweep-alpha", "train and test MNLL over a grid of pseudo-counts");
    sweep_inducing.app = app.add_subcommand("sweep-inducing", "error rate and fit time against inducing count");
    reliability.app = app.add_subcommand("reliability", "run and write reliability diagram data");
    for (Verb* v : {&run, &sweep_alpha, &sweep_inducing, &reliability}) add_flags(*v);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        if (*run.app) return run_verb(run, false);
        if (*reliability.app) return run_verb(reliability, true);
        if (*sweep_alpha.app) return sweep_alpha_verb(sweep_alpha);
        if (*sweep_inducing.app) return sweep_inducing_verb(sweep_inducing);
    } catch (const gpd::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
