#include "gpd/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "gpd/baselines.hpp"
#include "gpd/classifier.hpp"
#include "gpd/errors.hpp"

namespace gpd {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string opt17(const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); }

double parse_real(const std::string& key, const std::string& text) {
    double v = 0.0;
    const std::string t = trim(text);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
        throw InputError("config: '" + key + "' expects a number, got '" + text + "'");
    }
    return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
    long long v = 0;
    const std::string t = trim(text);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        throw InputError("config: '" + key + "' expects an integer, got '" + text + "'");
    }
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) {
            out += fmt17(xs[i]);
        } else {
            out += std::to_string(xs[i]);
        }
    }
    return out;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Per-replicate random streams.
enum Stream : std::uint64_t {
    kOptimizerStream = 1,
    kInducingStream = 2,
    kPredictStream = 3,
    kAlphaStream = 100,
};

OptimizerConfig optimizer_for(const ExperimentConfig& config, std::uint64_t rep_seed) {
    OptimizerConfig oc;
    oc.restarts = config.restarts;
    oc.max_iterations = config.max_iterations;
    oc.min_lengthscale_factor = config.min_lengthscale_factor;
    oc.seed = derive_seed(rep_seed, kOptimizerStream);
    return oc;
}

std::optional<Eigen::MatrixXd> choose_inducing(const ExperimentConfig& config, const Eigen::MatrixXd& X,
                                               std::uint64_t rep_seed) {
    if (!config.inducing) return std::nullopt;
    if (*config.inducing >= X.rows()) return X;
    return kmeans_inducing(X, *config.inducing, derive_seed(rep_seed, kInducingStream)).Z;
}

struct Prepared {
    Dataset train, calibration, test;
};

Prepared prepare(const ExperimentConfig& config, const Dataset& data, int replicate) {
    SplitSpec spec;
    spec.test_fraction = config.test_fraction;
    spec.calibration_fraction = config.method == Method::gpr_platt ? config.calibration_fraction : 0.0;
    spec.seed = config.seed;
    spec.replicate_index = replicate;
    const Split parts = split(data, spec);
    const Standardized s = standardize(parts.train, {parts.calibration, parts.test});
    return {s.train, s.others[0], s.others[1]};
}

/// In-sample training MNLL of a GPD fit, the alpha selection score.
double gpd_train_mnll(const GpdModel& model, const Dataset& train, int samples, std::uint64_t seed) {
    return mnll(gpd_predict(model, train.X, samples, seed).probs, train.y);
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::gpd: return "gpd";
        case Method::gpr: return "gpr";
        case Method::gpr_platt: return "gpr_platt";
        case Method::laplace_gpc: return "laplace_gpc";
    }
    return "?";
}

Method parse_method(const std::string& text) {
    const std::string t = trim(text);
    if (t == "gpd") return Method::gpd;
    if (t == "gpr") return Method::gpr;
    if (t == "gpr_platt") return Method::gpr_platt;
    if (t == "laplace_gpc") return Method::laplace_gpc;
    throw InputError("unknown method '" + text + "' (expected gpd, gpr, gpr_platt or laplace_gpc)");
}

void ExperimentConfig::validate() const {
    if (dataset.empty()) throw InputError("config: dataset is required");
    if (inducing && *inducing < 1) throw InputError("config: inducing must be positive or 'exact'");
    if (inducing && method == Method::laplace_gpc) {
        throw InputError("config: laplace_gpc supports only inducing = exact");
    }
    if (alpha_eps) {
        if (method != Method::gpd) throw InputError("config: alpha_eps applies only to method gpd");
        (void)AlphaEpsilon(*alpha_eps);
    }
    if (alpha_grid.empty()) throw InputError("config: alpha_grid is empty");
    for (double a : alpha_grid) (void)AlphaEpsilon(a);
    for (int m : inducing_list) {
        if (m < 1) throw InputError("config: inducing_list entries must be positive");
    }
    if (replicates < 1) throw InputError("config: replicates must be at least 1");
    if (mc_samples < 1) throw InputError("config: mc_samples must be at least 1");
    if (bins < 1) throw InputError("config: bins must be at least 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InputError("config: test_fraction must lie in (0, 1)");
    if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
        throw InputError("config: calibration_fraction must lie in (0, 1)");
    }
    if (restarts < 1) throw InputError("config: restarts must be at least 1");
    if (max_iterations < 1) throw InputError("config: max_iterations must be at least 1");
    if (!(min_lengthscale_factor >= 0.0)) throw InputError("config: min_lengthscale_factor must be non-negative");
    if (!(band_quantile > 0.0 && band_quantile < 1.0)) throw InputError("config: band_quantile must lie in (0, 1)");
    if (out.empty()) throw InputError("config: out must name a directory");
}

void ExperimentConfig::validate_for(const Dataset& data) const {
    validate();
    data.validate();
    if (data.num_classes < 2) throw InputError("dataset '" + data.name + "' has fewer than two classes");
    if (method == Method::laplace_gpc && data.num_classes != 2) {
        throw InputError("laplace_gpc needs a binary dataset; '" + data.name + "' has " +
                         std::to_string(data.num_classes) + " classes");
    }
    if (data.size() < 4) throw InputError("dataset '" + data.name + "' is too small to split");
}

void set_config_value(ExperimentConfig& c, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    auto as_int = [&](int lo) {
        const long long v = parse_integer(key, value);
        if (v < lo || v > 1'000'000'000) throw InputError("config: '" + key + "' out of range");
        return static_cast<int>(v);
    };
    if (key == "dataset") {
        c.dataset = value;
    } else if (key == "label_column") {
        c.label_column = value;
    } else if (key == "method") {
        c.method = parse_method(value);
    } else if (key == "inducing") {
        if (value == "exact") {
            c.inducing.reset();
        } else {
            c.inducing = as_int(1);
        }
    } else if (key == "alpha_eps") {
        if (value == "auto") {
            c.alpha_eps.reset();
        } else {
            c.alpha_eps = parse_real(key, value);
        }
    } else if (key == "alpha_grid") {
        c.alpha_grid.clear();
        for (const auto& item : split_list(value)) c.alpha_grid.push_back(parse_real(key, item));
    } else if (key == "inducing_list") {
        c.inducing_list.clear();
        for (const auto& item : split_list(value)) {
            const long long m = parse_integer(key, item);
            if (m < 1 || m > 1'000'000'000) throw InputError("config: inducing_list entries must be positive");
            c.inducing_list.push_back(static_cast<int>(m));
        }
    } else if (key == "replicates") {
        c.replicates = as_int(1);
    } else if (key == "mc_samples") {
        c.mc_samples = as_int(1);
    } else if (key == "bins") {
        c.bins = as_int(1);
    } else if (key == "seed") {
        const long long v = parse_integer(key, value);
        if (v < 0) throw InputError("config: seed must be non-negative");
        c.seed = static_cast<std::uint64_t>(v);
    } else if (key == "out") {
        c.out = value;
    } else if (key == "test_fraction") {
        c.test_fraction = parse_real(key, value);
    } else if (key == "calibration_fraction") {
        c.calibration_fraction = parse_real(key, value);
    } else if (key == "restarts") {
        c.restarts = as_int(1);
    } else if (key == "max_iterations") {
        c.max_iterations = as_int(1);
    } else if (key == "min_lengthscale_factor") {
        c.min_lengthscale_factor = parse_real(key, value);
    } else if (key == "band_quantile") {
        c.band_quantile = parse_real(key, value);
    } else {
        throw InputError("config: unknown key '" + key + "'");
    }
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        set_config_value(base, line.substr(0, eq), line.substr(eq + 1));
    }
    return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), std::move(base));
}

std::string canonical_config(const ExperimentConfig& c) {
    std::string s;
    auto put = [&](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
    put("alpha_eps", c.alpha_eps ? fmt17(*c.alpha_eps) : "auto");
    put("alpha_grid", join(c.alpha_grid));
    put("band_quantile", fmt17(c.band_quantile));
    put("bins", std::to_string(c.bins));
    put("calibration_fraction", fmt17(c.calibration_fraction));
    put("dataset", c.dataset);
    put("inducing", c.inducing ? std::to_string(*c.inducing) : "exact");
    put("inducing_list", join(c.inducing_list));
    put("label_column", c.label_column);
    put("max_iterations", std::to_string(c.max_iterations));
    put("mc_samples", std::to_string(c.mc_samples));
    put("min_lengthscale_factor", fmt17(c.min_lengthscale_factor));
    put("method", to_string(c.method));
    put("replicates", std::to_string(c.replicates));
    put("restarts", std::to_string(c.restarts));
    put("seed", std::to_string(c.seed));
    put("test_fraction", fmt17(c.test_fraction));
    return s;
}

std::string config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_config(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Dataset load_dataset(const ExperimentConfig& config) {
    const std::string& spec = config.dataset;
    if (spec.rfind("synth:", 0) == 0) {
        std::vector<std::string> parts;
        std::string item;
        std::istringstream in(spec);
        while (std::getline(in, item, ':')) parts.push_back(item);
        if (parts.size() < 3 || parts.size() > 4) {
            throw InputError("dataset '" + spec + "': expected synth:<sinusoid|step>:<n>[:<seed>]");
        }
        const ProbabilityFunction fp = ProbabilityFunction::by_name(parts[1]);
        const long long n = parse_integer("dataset", parts[2]);
        if (n < 4 || n > 10'000'000) throw InputError("dataset '" + spec + "': size out of range");
        const std::uint64_t seed =
            parts.size() == 4 ? static_cast<std::uint64_t>(parse_integer("dataset", parts[3])) : config.seed;
        Dataset d = synth_bernoulli_1d(static_cast<int>(n), fp, seed).data;
        d.name = spec;
        return d;
    }
    return load_csv(spec, config.label_column.empty() ? LabelColumn::last()
                                                      : LabelColumn::named(config.label_column));
}

int RunRecord::succeeded() const {
    return static_cast<int>(std::count_if(replicates.begin(), replicates.end(),
                                          [](const ReplicateRecord& r) { return r.ok; }));
}

ReplicateRecord run_replicate(const ExperimentConfig& config, const Dataset& data, int replicate,
                              bool reliability) {
    ReplicateRecord rec;
    rec.index = replicate;
    try {
        const std::uint64_t rep_seed = derive_seed(config.seed, static_cast<std::uint64_t>(replicate));
        const Prepared p = prepare(config, data, replicate);
        rec.n_train = static_cast<int>(p.train.size());
        rec.n_test = static_cast<int>(p.test.size());
        const OptimizerConfig oc = optimizer_for(config, rep_seed);
        const int C = data.num_classes;
        const std::uint64_t predict_seed = derive_seed(rep_seed, kPredictStream);

        std::function<LatentPrediction(const Eigen::MatrixXd&)> latent_fn;
        ProbabilityLink link;

        auto t0 = Clock::now();
        const std::optional<Eigen::MatrixXd> Z = choose_inducing(config, p.train.X, rep_seed);
        if (Z) rec.inducing = static_cast<int>(Z->rows());

        switch (config.method) {
            case Method::gpd: {
                std::optional<GpdModel> model;
                if (config.alpha_eps) {
                    model = gpd_fit(p.train.X, p.train.y, C, AlphaEpsilon(*config.alpha_eps), Z, oc);
                } else {
                    std::vector<AlphaEpsilon> grid;
                    for (double a : config.alpha_grid) grid.emplace_back(a);
                    std::vector<std::optional<GpdModel>> fits(grid.size());
                    const AlphaSelection sel = select_alpha_eps(grid, [&](AlphaEpsilon a, std::size_t i) {
                        fits[i] = gpd_fit(p.train.X, p.train.y, C, a, Z, oc);
                        return gpd_train_mnll(*fits[i], p.train, config.mc_samples,
                                              derive_seed(rep_seed, kAlphaStream + i));
                    });
                    rec.alpha_scores = sel.scores;
                    for (std::size_t i = 0; i < grid.size(); ++i) {
                        if (grid[i] == sel.best) model = std::move(fits[i]);
                    }
                }
                rec.fit_seconds = seconds_since(t0);
                rec.alpha_eps = model->targets.alpha_eps.value();
                rec.variance = model->hyper.kernel.variance();
                rec.lengthscale = model->hyper.kernel.lengthscale();
                auto shared = std::make_shared<GpdModel>(std::move(*model));
                latent_fn = [shared](const Eigen::MatrixXd& Xs) { return gpd_latent(*shared, Xs); };
                const int S = config.mc_samples;
                link = [S, predict_seed](const LatentPrediction& lat) {
                    return softmax_expectation(lat, S, predict_seed).probs;
                };
                break;
            }
            case Method::gpr:
            case Method::gpr_platt: {
                auto model = std::make_shared<GprLabelsModel>(gpr_labels_fit(p.train.X, p.train.y, C, Z, oc));
                std::vector<PlattParams> platt;
                if (config.method == Method::gpr_platt) {
                    platt = gpr_platt_calibrate(*model, p.calibration.X, p.calibration.y);
                }
                rec.fit_seconds = seconds_since(t0);
                rec.variance = model->hyper.kernel.variance();
                rec.lengthscale = model->hyper.kernel.lengthscale();
                rec.noise_variance = model->hyper.noise.noise_variance();
                latent_fn = [model](const Eigen::MatrixXd& Xs) { return predict_latent(model->posterior, Xs); };
                if (config.method == Method::gpr) {
                    link = [](const LatentPrediction& lat) { return clipped_probabilities(lat.means); };
                } else {
                    link = [platt](const LatentPrediction& lat) { return platt_probabilities(lat.means, platt); };
                }
                break;
            }
            case Method::laplace_gpc: {
                const HyperparamFit hyper =
                    optimize_laplace(p.train.X, p.train.y, laplace_kernel_init(p.train.X), oc);
                auto model = std::make_shared<LaplaceModel>(laplace_gpc_fit(p.train.X, p.train.y, hyper.kernel));
                rec.fit_seconds = seconds_since(t0);
                rec.variance = hyper.kernel.variance();
                rec.lengthscale = hyper.kernel.lengthscale();
                latent_fn = [model](const Eigen::MatrixXd& Xs) { return laplace_latent(*model, Xs); };
                link = [](const LatentPrediction& lat) { return logistic_probabilities(lat); };
                break;
            }
        }

        t0 = Clock::now();
        const LatentPrediction latent = latent_fn(p.test.X);
        const Eigen::MatrixXd probs = link(latent);
        rec.predict_seconds = seconds_since(t0);
        rec.report = calibration_report(probs, p.test.y, config.bins);
        if (reliability) {
            rec.band = reliability_band(latent, link, p.test.y, config.band_quantile, config.bins);
        }
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    return rec;
}

RunRecord run_experiment(const ExperimentConfig& config, const Dataset& data, const RunOptions& options) {
    config.validate_for(data);
    RunRecord record;
    record.config = config;
    record.hash = config_hash(config);
    record.dataset_name = data.name;
    record.n = static_cast<int>(data.size());
    record.d = static_cast<int>(data.X.cols());
    record.num_classes = data.num_classes;
    for (int r = 0; r < config.replicates; ++r) {
        record.replicates.push_back(run_replicate(config, data, r, options.reliability));
    }
    return record;
}

std::vector<AlphaSweepRow> sweep_alpha_eps(const ExperimentConfig& config, const Dataset& data,
                                           const std::vector<double>& grid) {
    ExperimentConfig c = config;
    c.method = Method::gpd;
    c.alpha_eps.reset();
    c.alpha_grid = grid;
    c.validate_for(data);
    std::vector<AlphaSweepRow> rows;
    for (int r = 0; r < c.replicates; ++r) {
        const std::uint64_t rep_seed = derive_seed(c.seed, static_cast<std::uint64_t>(r));
        const Prepared p = prepare(c, data, r);
        const OptimizerConfig oc = optimizer_for(c, rep_seed);
        const std::optional<Eigen::MatrixXd> Z = choose_inducing(c, p.train.X, rep_seed);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            AlphaSweepRow row{grid[i], std::nan(""), std::nan(""), r};
            try {
                const GpdModel model = gpd_fit(p.train.X, p.train.y, data.num_classes, AlphaEpsilon(grid[i]), Z, oc);
                row.train_mnll = gpd_train_mnll(model, p.train, c.mc_samples, derive_seed(rep_seed, kAlphaStream + i));
                row.test_mnll = mnll(gpd_predict(model, p.test.X, c.mc_samples, derive_seed(rep_seed, kPredictStream)).probs,
                                     p.test.y);
            } catch (const NumericalError&) {
            } catch (const ModelError&) {
            }
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<InducingSweepRow> sweep_inducing(const ExperimentConfig& config, const Dataset& data,
                                             const std::vector<int>& m_list) {
    ExperimentConfig c = config;
    c.method = Method::gpd;
    c.validate_for(data);
    if (m_list.empty()) throw InputError("sweep_inducing: empty list of inducing counts");
    std::vector<InducingSweepRow> rows;
    for (int r = 0; r < c.replicates; ++r) {
        for (int m : m_list) {
            if (m < 1) throw InputError("sweep_inducing: inducing counts must be positive");
            c.inducing = m;
            const ReplicateRecord rec = run_replicate(c, data, r);
            rows.push_back({m, rec.ok ? rec.report.error_rate : std::nan(""),
                            rec.ok ? rec.fit_seconds : std::nan(""), r});
        }
    }
    return rows;
}

std::string run_record_json(const RunRecord& record) {
    using nlohmann::json;
    json j;
    j["config_hash"] = record.hash;
    json cfg = json::object();
    std::istringstream in(canonical_config(record.config));
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        cfg[line.substr(0, eq)] = line.substr(eq + 1);
    }
    cfg["out"] = record.config.out;
    j["config"] = cfg;
    j["dataset"] = {{"name", record.dataset_name}, {"n", record.n}, {"d", record.d},
                    {"num_classes", record.num_classes}};
    j["replicates_requested"] = record.config.replicates;
    j["replicates_succeeded"] = record.succeeded();
    json reps = json::array();
    std::vector<double> errs, mnlls, eces;
    for (const auto& r : record.replicates) {
        json jr;
        jr["index"] = r.index;
        jr["ok"] = r.ok;
        if (!r.ok) {
            jr["error"] = r.error;
            reps.push_back(jr);
            continue;
        }
        jr["n_train"] = r.n_train;
        jr["n_test"] = r.n_test;
        jr["fit_seconds"] = r.fit_seconds;
        jr["predict_seconds"] = r.predict_seconds;
        jr["error_rate"] = r.report.error_rate;
        jr["mnll"] = r.report.mnll;
        jr["ece"] = r.report.ece;
        jr["hyperparameters"] = {{"variance", r.variance}, {"lengthscale", r.lengthscale}};
        if (r.noise_variance) jr["hyperparameters"]["noise_variance"] = *r.noise_variance;
        if (r.alpha_eps) jr["alpha_eps"] = *r.alpha_eps;
        if (!r.alpha_scores.empty()) {
            json scores = json::array();
            for (double s : r.alpha_scores) scores.push_back(std::isfinite(s) ? json(s) : json(nullptr));
            jr["alpha_train_mnll"] = scores;
        }
        jr["inducing"] = r.inducing ? json(*r.inducing) : json("exact");
        json bins = json::array();
        for (const auto& b : r.report.bins) {
            bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count},
                            {"confidence", b.confidence}, {"accuracy", b.accuracy}});
        }
        jr["bins"] = bins;
        reps.push_back(jr);
        errs.push_back(r.report.error_rate);
        mnlls.push_back(r.report.mnll);
        eces.push_back(r.report.ece);
    }
    j["replicates"] = reps;
    auto summary = [](std::vector<double> v) {
        json s;
        if (v.empty()) return s;
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        std::sort(v.begin(), v.end());
        const std::size_t k = v.size() / 2;
        const double median = v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
        s["mean"] = mean;
        s["median"] = median;
        return s;
    };
    j["summary"] = {{"error_rate", summary(errs)}, {"mnll", summary(mnlls)}, {"ece", summary(eces)}};
    return j.dump(2) + "\n";
}

std::string metrics_csv(const RunRecord& record) {
    std::string s = "replicate,method,ok,error_rate,mnll,ece,alpha_eps,variance,lengthscale,noise_variance\n";
    const std::string method = to_string(record.config.method);
    for (const auto& r : record.replicates) {
        s += std::to_string(r.index) + "," + method + "," + (r.ok ? "1" : "0") + ",";
        if (r.ok) {
            s += fmt17(r.report.error_rate) + "," + fmt17(r.report.mnll) + "," + fmt17(r.report.ece) + "," +
                 opt17(r.alpha_eps) + "," + fmt17(r.variance) + "," + fmt17(r.lengthscale) + "," +
                 opt17(r.noise_variance);
        } else {
            s += ",,,,,,";
        }
        s += "\n";
    }
    return s;
}

std::string alpha_sweep_csv(const std::vector<AlphaSweepRow>& rows) {
    std::string s = "alpha_eps,train_mnll,test_mnll,replicate\n";
    for (const auto& r : rows) {
        s += fmt17(r.alpha_eps) + "," + fmt17(r.train_mnll) + "," + fmt17(r.test_mnll) + "," +
             std::to_string(r.replicate) + "\n";
    }
    return s;
}

std::string inducing_sweep_csv(const std::vector<InducingSweepRow>& rows) {
    std::string s = "m,error_rate,fit_seconds,replicate\n";
    for (const auto& r : rows) {
        s += std::to_string(r.m) + "," + fmt17(r.error_rate) + "," + fmt17(r.fit_seconds) + "," +
             std::to_string(r.replicate) + "\n";
    }
    return s;
}

std::string reliability_csv(const ReliabilityBand& band) {
    std::string s = std::string(kReliabilityHeader) + "\n";
    for (std::size_t k = 0; k < band.mean.size(); ++k) {
        const auto& b = band.mean[k];
        s += fmt17(b.lo) + "," + fmt17(b.hi) + "," + std::to_string(b.count) + "," + fmt17(b.confidence) + "," +
             fmt17(b.accuracy) + "," + fmt17(band.lower[k].accuracy) + "," + fmt17(band.upper[k].accuracy) + "\n";
    }
    return s;
}

void write_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write '" + tmp.string() + "'");
        out << contents;
        out.flush();
        if (!out) throw InputError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

std::vector<std::string> write_run_outputs(const RunRecord& record) {
    namespace fs = std::filesystem;
    const fs::path dir(record.config.out);
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& contents) {
        const std::string path = (dir / name).string();
        write_atomic(path, contents);
        written.push_back(path);
    };
    emit("run_" + record.hash + ".json", run_record_json(record));
    emit("metrics_" + record.hash + ".csv", metrics_csv(record));
    for (const auto& r : record.replicates) {
        if (r.ok && r.band) {
            emit("reliability_" + to_string(record.config.method) + "_r" + std::to_string(r.index) + "_" +
                     record.hash + ".csv",
                 reliability_csv(*r.band));
        }
    }
    return written;
}

}  // namespace gpd
