#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gpd {

struct Dataset {
    Eigen::MatrixXd X;          // n x d
    std::vector<int> y;         // labels in [0, num_classes)
    int num_classes = 0;
    std::string name;
    std::vector<std::string> class_names;  // original label text per class index
    std::vector<std::string> feature_names;

    [[nodiscard]] Eigen::Index size() const { return X.rows(); }
    /// Throws InputError when any invariant is broken.
    void validate() const;
    /// Rows selected by index, keeping class metadata.
    [[nodiscard]] Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

/// Which column of a CSV holds the label.
struct LabelColumn {
    std::string name;  // empty selects the last column

    static LabelColumn last() { return {}; }
    static LabelColumn named(std::string n) { return {std::move(n)}; }
};

/// Reads comma-separated numeric features plus one label column. A header is
/// detected when the first row has a non-numeric feature field. Integer labels
/// map to classes in increasing numeric order, any other labels in order of
/// first appearance.
[[nodiscard]] Dataset load_csv(const std::string& path, const LabelColumn& label = LabelColumn::last());
[[nodiscard]] Dataset parse_csv(const std::string& text, const LabelColumn& label = LabelColumn::last(),
                                const std::string& name = "csv");

/// Header row plus one row per point, features at 17 significant digits and
/// the label last.
void save_csv(const Dataset& data, const std::string& path);
[[nodiscard]] std::string format_csv(const Dataset& data);

struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd sd;  // population sd; 1 for constant features

    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
    [[nodiscard]] Dataset apply(const Dataset& data) const;
};

[[nodiscard]] Standardizer fit_standardizer(const Eigen::MatrixXd& X);

struct Standardized {
    Dataset train;
    std::vector<Dataset> others;
    Standardizer scaler;
};

/// Centres and scales every dataset with the training statistics.
[[nodiscard]] Standardized standardize(const Dataset& train, const std::vector<Dataset>& others);

struct SplitSpec {
    double test_fraction = 0.25;
    double calibration_fraction = 0.0;  // of the non-test remainder
    std::uint64_t seed = 0;
    int replicate_index = 0;
};

struct Split {
    Dataset train;
    Dataset calibration;  // empty when calibration_fraction == 0
    Dataset test;
    std::vector<Eigen::Index> train_rows, calibration_rows, test_rows;
};

/// Stratified shuffle split, deterministic in (seed, replicate_index). Each
/// class contributes to every part in proportion (largest-remainder rounding).
[[nodiscard]] Split split(const Dataset& data, const SplitSpec& spec);

/// Class-1 probability as a function of a scalar input.
struct ProbabilityFunction {
    std::string name;
    std::function<double(double)> fn;
    double lo = -3.0;  // input interval
    double hi = 3.0;

    /// 0.5 + 0.4 sin(1.5 x) on [-3, 3]; every label is genuinely random.
    static ProbabilityFunction sinusoid();
    /// 0.05 below x = 0 and 0.95 above, on [-3, 3]; nearly separable.
    static ProbabilityFunction step();
    static ProbabilityFunction constant(double p);
    /// Looks up "sinusoid" or "step".
    static ProbabilityFunction by_name(const std::string& name);
};

struct SyntheticDataset {
    Dataset data;
    Eigen::VectorXd true_prob;  // f_p at each input
};

/// Inputs uniform on the function's interval, labels ~ Bernoulli(f_p(x)).
[[nodiscard]] SyntheticDataset synth_bernoulli_1d(int n, const ProbabilityFunction& fp,
                                                  std::uint64_t seed);

/// Mixes a base seed with a stream index (replicate, grid point, ...).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace gpd
