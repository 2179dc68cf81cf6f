#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gpd/gp_exact.hpp"

namespace gpd {

/// Predicted class probabilities, one row per test point.
struct ClassProbabilities {
    Eigen::MatrixXd probs;
    int mc_samples = 0;  // 0 when computed deterministically
    std::uint64_t seed = 0;
};

inline constexpr int kDefaultMcSamples = 1000;
inline constexpr int kDefaultBins = 10;

/// Monte-Carlo estimate of E[softmax(f)] with independent Gaussian class
/// marginals. Each test point draws from its own stream keyed by (seed, row),
/// so rows are evaluated in parallel without affecting the result. Rows with
/// zero variance in every class are evaluated exactly.
[[nodiscard]] ClassProbabilities softmax_expectation(const Eigen::MatrixXd& means,
                                                     const Eigen::MatrixXd& variances, int samples,
                                                     std::uint64_t seed);
[[nodiscard]] ClassProbabilities softmax_expectation(const LatentPrediction& latent, int samples,
                                                     std::uint64_t seed);

/// Single-threaded reference for softmax_expectation.
[[nodiscard]] ClassProbabilities softmax_expectation_serial(const Eigen::MatrixXd& means,
                                                            const Eigen::MatrixXd& variances,
                                                            int samples, std::uint64_t seed);

/// Deterministic softmax of each row.
[[nodiscard]] Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

struct ReliabilityBin {
    double lo = 0.0;
    double hi = 0.0;
    long count = 0;
    double confidence = 0.0;  // mean max-probability in the bin, 0 if empty
    double accuracy = 0.0;    // fraction correct in the bin, 0 if empty
};

struct EceResult {
    double ece = 0.0;
    std::vector<ReliabilityBin> bins;
};

/// Equal-width confidence bins on [0, 1]; a confidence on an interior edge
/// belongs to the upper bin and 1.0 to the last one.
[[nodiscard]] EceResult ece(const Eigen::MatrixXd& probs, std::span<const int> labels, int num_bins);

/// sum_m (count_m / n) |acc_m - conf_m|, in bin order.
[[nodiscard]] double ece_from_bins(std::span<const ReliabilityBin> bins);

inline constexpr double kProbabilityFloor = 1e-12;

/// Mean negative log-probability of the true class (floored at 1e-12).
[[nodiscard]] double mnll(const Eigen::MatrixXd& probs, std::span<const int> labels);

/// Fraction of rows whose argmax (lowest index on ties) misses the label.
[[nodiscard]] double error_rate(const Eigen::MatrixXd& probs, std::span<const int> labels);

[[nodiscard]] int argmax_row(const Eigen::MatrixXd& probs, Eigen::Index row);

struct CalibrationReport {
    double error_rate = 0.0;
    double mnll = 0.0;
    double ece = 0.0;
    std::vector<ReliabilityBin> bins;
    int num_bins = 0;
};

[[nodiscard]] CalibrationReport calibration_report(const Eigen::MatrixXd& probs,
                                                   std::span<const int> labels, int num_bins);

struct PlattParams {
    double a = 1.0;
    double b = 0.0;
    int iterations = 0;
};

/// Maximum-likelihood fit of sigma(a * score + b) using Newton's method and
/// Platt's smoothed targets (N+ + 1)/(N+ + 2) and 1/(N- + 2).
[[nodiscard]] PlattParams platt_fit(std::span<const double> scores, std::span<const int> labels);

[[nodiscard]] Eigen::VectorXd platt_apply(const Eigen::Ref<const Eigen::VectorXd>& scores, double a,
                                          double b);

[[nodiscard]] double sigmoid(double x);

/// Standard-normal quantile function.
[[nodiscard]] double normal_quantile(double p);

/// Half-width multiplier of a central band holding `quantile` of the mass,
/// e.g. 0.95 -> 1.959964.
[[nodiscard]] double band_z(double quantile);

/// Maps latent marginals to class probabilities for one kind of classifier.
using ProbabilityLink = std::function<Eigen::MatrixXd(const LatentPrediction&)>;

struct ReliabilityBand {
    std::vector<ReliabilityBin> mean;
    std::vector<ReliabilityBin> lower;
    std::vector<ReliabilityBin> upper;
    std::vector<double> histogram;  // share of test points per bin (mean classifier)
    double ece = 0.0;               // of the mean classifier
    double z = 0.0;
};

/// Reliability curves of the mean classifier and, for binary problems, of the
/// classifiers obtained by moving each latent to its lower / upper quantile
/// surface (mean -/+ z sd, zero variance) before applying the link. The lower
/// classifier pushes the class-1 latent down and the class-0 latent up; a
/// single-column latent is treated as the class-1 logit. For more than two
/// classes the band collapses onto the mean curve.
[[nodiscard]] ReliabilityBand reliability_band(const LatentPrediction& latent,
                                               const ProbabilityLink& link,
                                               std::span<const int> labels, double quantile,
                                               int num_bins);

}  // namespace gpd
