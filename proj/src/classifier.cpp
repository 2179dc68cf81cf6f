#include "gpd/classifier.hpp"

#include <cmath>

#include "gpd/errors.hpp"

namespace gpd {

GpdModel gpd_fit(const Eigen::MatrixXd& X, std::span<const int> labels, int num_classes,
                 AlphaEpsilon alpha_eps, const std::optional<Eigen::MatrixXd>& inducing,
                 const OptimizerConfig& config) {
    if (X.rows() < 1) throw InputError("gpd_fit: empty training set");
    TransformedTargets targets = transform(one_hot(labels, num_classes), alpha_eps);
    const NoiseModel noise = NoiseModel::heteroskedastic(targets.sigma2_tilde);
    const KernelParams init = default_kernel_init(X, targets.y_tilde);
    if (inducing) {
        HyperparamFit hyper = optimize_sparse(X, *inducing, targets.y_tilde, noise, init, config);
        SparsePosterior post = fit_sparse(X, *inducing, targets.y_tilde, noise, hyper.kernel);
        return {std::move(post), std::move(hyper), std::move(targets)};
    }
    HyperparamFit hyper = optimize_hyperparams(X, targets.y_tilde, noise, init, config);
    ExactPosterior post = fit_exact(X, targets.y_tilde, noise, hyper.kernel);
    return {std::move(post), std::move(hyper), std::move(targets)};
}

LatentPrediction gpd_latent(const GpdModel& model, const Eigen::MatrixXd& X_star) {
    return predict_latent(model.posterior, X_star);
}

ClassProbabilities gpd_predict(const GpdModel& model, const Eigen::MatrixXd& X_star, int samples,
                               std::uint64_t seed) {
    return softmax_expectation(gpd_latent(model, X_star), samples, seed);
}

KernelParams laplace_kernel_init(const Eigen::MatrixXd& X) {
    return {0.0, std::log(median_heuristic(X))};
}

}  // namespace gpd
