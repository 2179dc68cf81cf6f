#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gpd {

/// Dirichlet pseudo-count added to every class count; 0 < value < 1.
class AlphaEpsilon {
public:
    explicit AlphaEpsilon(double value);
    [[nodiscard]] double value() const { return value_; }
    friend bool operator==(const AlphaEpsilon&, const AlphaEpsilon&) = default;

private:
    double value_;
};

/// Log-space regression targets and per-entry noise variances, one column per
/// class. Each entry depends only on whether the class was observed.
struct TransformedTargets {
    Eigen::MatrixXd y_tilde;
    Eigen::MatrixXd sigma2_tilde;
    AlphaEpsilon alpha_eps{0.01};
    int num_classes = 0;
};

/// Log-normal parameters (mean, variance of the log) whose mean and variance
/// both equal alpha, i.e. the moment match of Gamma(alpha, 1).
struct LogNormalMatch {
    double y_tilde;
    double sigma2_tilde;
};
[[nodiscard]] LogNormalMatch lognormal_match(double alpha);

[[nodiscard]] Eigen::MatrixXd one_hot(std::span<const int> labels, int num_classes);

[[nodiscard]] TransformedTargets transform(const Eigen::MatrixXd& one_hot, AlphaEpsilon alpha_eps);

/// Pseudo-counts explored by default.
[[nodiscard]] std::vector<AlphaEpsilon> default_alpha_grid();

/// Scores one grid point; returns the training MNLL of a model fitted with
/// that pseudo-count. May throw to signal a failed fit.
using AlphaScoreFn = std::function<double(AlphaEpsilon, std::size_t grid_index)>;

struct AlphaSelection {
    AlphaEpsilon best{0.01};
    std::vector<double> scores;  // NaN for failed grid points
};

/// Picks the grid point with the lowest score; ties go to the larger value.
[[nodiscard]] AlphaSelection select_alpha_eps(std::span<const AlphaEpsilon> grid,
                                              const AlphaScoreFn& fit_and_score);

}  // namespace gpd
