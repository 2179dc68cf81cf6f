#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpd/calibrate.hpp"
#include "gpd/data_io.hpp"

namespace gpd {

enum class Method { gpd, gpr, gpr_platt, laplace_gpc };

[[nodiscard]] std::string to_string(Method m);
[[nodiscard]] Method parse_method(const std::string& text);

struct ExperimentConfig {
    /// CSV path, or "synth:<sinusoid|step>:<n>[:<seed>]" (seed defaults to `seed`).
    std::string dataset;
    std::string label_column;  // empty selects the last column
    Method method = Method::gpd;
    std::optional<int> inducing;  // nullopt = exact GP
    std::optional<double> alpha_eps;  // nullopt = select on training MNLL
    std::vector<double> alpha_grid{0.1, 0.01, 0.001};
    std::vector<int> inducing_list{10, 50, 200};  // sweep-inducing only
    int replicates = 10;
    int mc_samples = kDefaultMcSamples;
    int bins = kDefaultBins;
    std::uint64_t seed = 0;
    std::string out = "out";
    double test_fraction = 0.25;
    double calibration_fraction = 0.2;  // of the training part, gpr_platt only
    int restarts = 3;
    int max_iterations = 200;
    double min_lengthscale_factor = 0.1;
    double band_quantile = 0.95;

    /// Field checks that need no data. Throws InputError.
    void validate() const;
    /// Checks that depend on the loaded data (class count, sizes).
    void validate_for(const Dataset& data) const;
};

/// Applies one `key = value` setting. Throws InputError for unknown keys or
/// unparsable values.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Flat text: one `key = value` per line, `#` starts a comment.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text,
                                            ExperimentConfig base = ExperimentConfig{});
[[nodiscard]] ExperimentConfig load_config(const std::string& path,
                                           ExperimentConfig base = ExperimentConfig{});

/// Canonical `key=value` lines for every field that affects results (the
/// output directory is excluded).
[[nodiscard]] std::string canonical_config(const ExperimentConfig& config);
/// 16 hex digits of FNV-1a over canonical_config.
[[nodiscard]] std::string config_hash(const ExperimentConfig& config);

[[nodiscard]] Dataset load_dataset(const ExperimentConfig& config);

struct ReplicateRecord {
    int index = 0;
    bool ok = false;
    std::string error;
    CalibrationReport report;
    double fit_seconds = 0.0;
    double predict_seconds = 0.0;
    double variance = 0.0;
    double lengthscale = 0.0;
    std::optional<double> noise_variance;  // homoskedastic models only
    std::optional<double> alpha_eps;       // gpd only
    std::vector<double> alpha_scores;      // training MNLL per grid point when selected
    std::optional<int> inducing;           // inducing points actually used
    int n_train = 0;
    int n_test = 0;
    std::optional<ReliabilityBand> band;   // when reliability output was requested
};

struct RunRecord {
    ExperimentConfig config;
    std::string hash;
    std::string dataset_name;
    int n = 0;
    int d = 0;
    int num_classes = 0;
    std::vector<ReplicateRecord> replicates;

    [[nodiscard]] int succeeded() const;
};

struct RunOptions {
    bool reliability = false;
};

/// Split, standardize, select alpha if needed, choose inducing points,
/// optimize hyperparameters, fit, predict and score, once per replicate. A
/// failing replicate is recorded rather than aborting the run.
[[nodiscard]] RunRecord run_experiment(const ExperimentConfig& config, const Dataset& data,
                                       const RunOptions& options = {});
/// A single replicate of the same pipeline.
[[nodiscard]] ReplicateRecord run_replicate(const ExperimentConfig& config, const Dataset& data,
                                            int replicate, bool reliability = false);

struct AlphaSweepRow {
    double alpha_eps;
    double train_mnll;
    double test_mnll;
    int replicate;
};

/// Fixed-alpha GPD fits over the grid for every replicate. Failed fits are
/// reported with NaN scores.
[[nodiscard]] std::vector<AlphaSweepRow> sweep_alpha_eps(const ExperimentConfig& config,
                                                         const Dataset& data,
                                                         const std::vector<double>& grid);

struct InducingSweepRow {
    int m;
    double error_rate;
    double fit_seconds;
    int replicate;
};

/// GPD with m inducing points for each m; m at or above the training size
/// uses the training inputs themselves.
[[nodiscard]] std::vector<InducingSweepRow> sweep_inducing(const ExperimentConfig& config,
                                                           const Dataset& data,
                                                           const std::vector<int>& m_list);

// Output files. Each name carries the config hash.

[[nodiscard]] std::string run_record_json(const RunRecord& record);
/// replicate,method,ok,error_rate,mnll,ece,alpha_eps,variance,lengthscale,noise_variance
[[nodiscard]] std::string metrics_csv(const RunRecord& record);
/// alpha_eps,train_mnll,test_mnll,replicate
[[nodiscard]] std::string alpha_sweep_csv(const std::vector<AlphaSweepRow>& rows);
/// m,error_rate,fit_seconds,replicate
[[nodiscard]] std::string inducing_sweep_csv(const std::vector<InducingSweepRow>& rows);
/// bin_lo,bin_hi,count,confidence,accuracy,lower_accuracy,upper_accuracy
[[nodiscard]] std::string reliability_csv(const ReliabilityBand& band);

inline constexpr const char* kReliabilityHeader =
    "bin_lo,bin_hi,count,confidence,accuracy,lower_accuracy,upper_accuracy";

/// Writes via a temporary file and rename.
void write_atomic(const std::string& path, const std::string& contents);

/// Writes run_<hash>.json and metrics_<hash>.csv (plus one
/// reliability_<method>_r<k>_<hash>.csv per replicate when present) under
/// config.out. Returns the paths written.
std::vector<std::string> write_run_outputs(const RunRecord& record);

}  // namespace gpd
