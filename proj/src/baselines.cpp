#include "gpd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "gpd/dirichlet.hpp"
#include "gpd/errors.hpp"
#include "gpd/optimize.hpp"

namespace gpd {

// ---------------------------------------------------------------------------
// GPR on labels

GprLabelsModel gpr_labels_fit(const Eigen::MatrixXd& X, std::span<const int> labels, int num_classes,
                              const std::optional<Eigen::MatrixXd>& inducing,
                              const OptimizerConfig& config) {
    if (X.rows() < 2) throw InputError("gpr_labels_fit: need at least two training points");
    const Eigen::MatrixXd Y = one_hot(labels, num_classes);
    const KernelParams init = default_kernel_init(X, Y);
    const NoiseModel noise0 = NoiseModel::homoskedastic(std::log(kDefaultInitNoiseVariance));
    if (inducing) {
        HyperparamFit hyper = optimize_sparse(X, *inducing, Y, noise0, init, config);
        SparsePosterior post = fit_sparse(X, *inducing, Y, hyper.noise, hyper.kernel);
        return {std::move(post), std::move(hyper)};
    }
    HyperparamFit hyper = optimize_hyperparams(X, Y, noise0, init, config);
    ExactPosterior post = fit_exact(X, Y, hyper.noise, hyper.kernel);
    return {std::move(post), std::move(hyper)};
}

Eigen::MatrixXd clipped_probabilities(const Eigen::MatrixXd& latent_means) {
    Eigen::MatrixXd p = latent_means.array().max(kProbabilityFloor).min(1.0 - kProbabilityFloor);
    for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
    return p;
}

Eigen::MatrixXd platt_probabilities(const Eigen::MatrixXd& latent_means,
                                    std::span<const PlattParams> platt) {
    if (static_cast<Eigen::Index>(platt.size()) != latent_means.cols()) {
        throw InputError("platt_probabilities: need one sigmoid per class");
    }
    Eigen::MatrixXd p(latent_means.rows(), latent_means.cols());
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
        const auto& pc = platt[static_cast<std::size_t>(c)];
        p.col(c) = platt_apply(latent_means.col(c), pc.a, pc.b);
    }
    for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
    return p;
}

std::vector<PlattParams> gpr_platt_calibrate(const GprLabelsModel& model, const Eigen::MatrixXd& X_cal,
                                             std::span<const int> labels_cal) {
    const LatentPrediction lat = predict_latent(model.posterior, X_cal);
    std::vector<PlattParams> out;
    std::vector<double> scores(static_cast<std::size_t>(X_cal.rows()));
    std::vector<int> targets(scores.size());
    for (Eigen::Index c = 0; c < lat.means.cols(); ++c) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            scores[i] = lat.means(static_cast<Eigen::Index>(i), c);
            targets[i] = labels_cal[i] == c ? 1 : 0;
        }
        out.push_back(platt_fit(scores, targets));
    }
    return out;
}

ClassProbabilities gpr_labels_predict(const GprLabelsModel& model, const Eigen::MatrixXd& X_star,
                                      const std::vector<PlattParams>* platt) {
    const LatentPrediction lat = predict_latent(model.posterior, X_star);
    ClassProbabilities out;
    out.probs = platt ? platt_probabilities(lat.means, *platt) : clipped_probabilities(lat.means);
    return out;
}

// ---------------------------------------------------------------------------
// Laplace GPC

QuadratureRule gauss_hermite(int points) {
    if (points < 1) throw InputError("gauss_hermite: need at least one point");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(points, points);
    for (int k = 1; k < points; ++k) {
        J(k, k - 1) = J(k - 1, k) = std::sqrt(0.5 * k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    QuadratureRule rule;
    rule.nodes = eig.eigenvalues();
    rule.weights = std::sqrt(std::numbers::pi) * eig.eigenvectors().row(0).transpose().array().square();
    return rule;
}

namespace {

constexpr int kLaplaceMaxNewton = 100;
constexpr double kLaplaceGradTol = 1e-6;
constexpr int kQuadraturePoints = 201;

const QuadratureRule& quadrature() {
    static const QuadratureRule rule = gauss_hermite(kQuadraturePoints);
    return rule;
}

Eigen::VectorXd binary_targets(std::span<const int> labels) {
    Eigen::VectorXd t(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw InputError("Laplace GPC needs 0/1 labels");
        t(static_cast<Eigen::Index>(i)) = labels[i];
    }
    return t;
}

Eigen::VectorXd logistic(const Eigen::VectorXd& f) {
    Eigen::VectorXd p(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) p(i) = sigmoid(f(i));
    return p;
}

double log_likelihood(const Eigen::VectorXd& t, const Eigen::VectorXd& f) {
    // log sigma(f) for t = 1, log sigma(-f) for t = 0.
    double ll = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        const double z = t(i) == 1.0 ? f(i) : -f(i);
        ll -= z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    }
    return ll;
}

struct ModeSearch {
    LaplaceModel model;
    Eigen::MatrixXd K;
    Eigen::VectorXd t;
};

ModeSearch find_mode(const Eigen::MatrixXd& X, std::span<const int> labels, const KernelParams& params) {
    if (static_cast<std::size_t>(X.rows()) != labels.size()) {
        throw InputError("laplace: inputs and labels differ in length");
    }
    if (!params.finite()) throw InputError("laplace: kernel parameters are not finite");
    ModeSearch s;
    s.t = binary_targets(labels);
    const Eigen::Index n = X.rows();
    s.K = kernel_matrix(X, X, params);
    LaplaceModel& m = s.model;
    m.train_inputs = X;
    m.params = params;
    m.a = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    double psi = log_likelihood(s.t, f);

    auto factor_at = [&](const Eigen::VectorXd& ff, Eigen::VectorXd& grad, Eigen::VectorXd& sw) {
        const Eigen::VectorXd pi = logistic(ff);
        grad = s.t - pi;
        sw = (pi.array() * (1.0 - pi.array())).sqrt();
        Eigen::MatrixXd B = sw.asDiagonal() * s.K * sw.asDiagonal();
        B.diagonal().array() += 1.0;
        m.b_chol.compute(B);
        if (m.b_chol.info() != Eigen::Success) throw NumericalError("laplace: chol(I + W^1/2 K W^1/2) failed");
    };

    Eigen::VectorXd grad, sw;
    factor_at(f, grad, sw);
    for (m.state.newton_iters = 0; m.state.newton_iters < kLaplaceMaxNewton; ++m.state.newton_iters) {
        if ((grad - m.a).norm() < kLaplaceGradTol) {
            m.state.converged = true;
            break;
        }
        const Eigen::VectorXd W = sw.array().square();
        const Eigen::VectorXd b = W.cwiseProduct(f) + grad;
        const Eigen::VectorXd rhs = sw.cwiseProduct(s.K * b);
        const Eigen::VectorXd a_new = b - sw.cwiseProduct(m.b_chol.solve(rhs));
        const Eigen::VectorXd da = a_new - m.a;
        bool improved = false;
        for (double step = 1.0; step > 1e-10; step *= 0.5) {
            const Eigen::VectorXd a_try = m.a + step * da;
            const Eigen::VectorXd f_try = s.K * a_try;
            const double psi_try = -0.5 * a_try.dot(f_try) + log_likelihood(s.t, f_try);
            if (std::isfinite(psi_try) && psi_try >= psi) {
                improved = psi_try > psi || step == 1.0;
                m.a = a_try;
                f = f_try;
                psi = psi_try;
                break;
            }
        }
        factor_at(f, grad, sw);
        if (!improved) {
            m.state.converged = (grad - m.a).norm() < kLaplaceGradTol;
            break;
        }
    }
    if (!m.state.converged && (grad - m.a).norm() < kLaplaceGradTol) m.state.converged = true;
    m.state.mode = f;
    m.state.W_sqrt = sw;
    m.grad_log_lik = grad;
    m.log_lik = log_likelihood(s.t, f);
    return s;
}

}  // namespace

LaplaceModel laplace_gpc_fit(const Eigen::MatrixXd& X, std::span<const int> labels,
                             const KernelParams& params) {
    ModeSearch s = find_mode(X, labels, params);
    if (!s.model.state.converged) {
        throw ModelError("laplace_gpc_fit: Newton did not converge in " +
                         std::to_string(s.model.state.newton_iters) + " iterations");
    }
    return std::move(s.model);
}

LatentPrediction laplace_latent(const LaplaceModel& model, const Eigen::MatrixXd& X_star) {
    const Eigen::Index q = X_star.rows();
    const double prior = model.params.variance();
    LatentPrediction out{Eigen::MatrixXd::Zero(q, 1), Eigen::MatrixXd::Constant(q, 1, prior)};
    if (model.train_inputs.rows() == 0) return out;
    const Eigen::MatrixXd Ks = kernel_matrix(model.train_inputs, X_star, model.params);
    out.means.col(0) = Ks.transpose() * model.grad_log_lik;
    const Eigen::MatrixXd V = model.b_chol.matrixL().solve(model.state.W_sqrt.asDiagonal() * Ks);
    out.variances.col(0) =
        (prior - V.colwise().squaredNorm().transpose().array()).max(1e-12 * prior).matrix();
    return out;
}

Eigen::MatrixXd logistic_probabilities(const LatentPrediction& latent) {
    const QuadratureRule& rule = quadrature();
    const double norm = 1.0 / std::sqrt(std::numbers::pi);
    Eigen::MatrixXd p(latent.means.rows(), 2);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double mu = latent.means(i, 0);
        const double var = latent.variances(i, 0);
        double p1;
        if (var == 0.0) {
            p1 = sigmoid(mu);
        } else {
            const double scale = std::sqrt(2.0 * var);
            p1 = 0.0;
            for (Eigen::Index k = 0; k < rule.nodes.size(); ++k) {
                p1 += rule.weights(k) * sigmoid(mu + scale * rule.nodes(k));
            }
            p1 = std::clamp(p1 * norm, 0.0, 1.0);
        }
        p(i, 1) = p1;
        p(i, 0) = 1.0 - p1;
    }
    return p;
}

ClassProbabilities laplace_gpc_predict(const LaplaceModel& model, const Eigen::MatrixXd& X_star) {
    return {logistic_probabilities(laplace_latent(model, X_star)), 0, 0};
}

double laplace_marginal_likelihood(const LaplaceModel& model) {
    if (model.train_inputs.rows() == 0) return 0.0;
    return model.log_lik - 0.5 * model.a.dot(model.state.mode) -
           model.b_chol.matrixLLT().diagonal().array().log().sum();
}

LmlEvaluation laplace_evidence_and_gradient(const Eigen::MatrixXd& X, std::span<const int> labels,
                                            const KernelParams& params) {
    ModeSearch s = find_mode(X, labels, params);
    const LaplaceModel& m = s.model;
    if (!m.state.converged) throw NumericalError("laplace evidence: Newton did not converge");
    LmlEvaluation out{laplace_marginal_likelihood(m), Eigen::VectorXd::Zero(2)};
    const Eigen::Index n = X.rows();
    if (n == 0) return out;

    const Eigen::VectorXd& sw = m.state.W_sqrt;
    const Eigen::VectorXd pi = logistic(m.state.mode);
    const Eigen::VectorXd d3 = -(pi.array() * (1.0 - pi.array()) * (1.0 - 2.0 * pi.array())).matrix();
    const auto L = m.b_chol.matrixL();
    // R = W^1/2 B^-1 W^1/2, C = L^-1 W^1/2 K.
    const Eigen::MatrixXd R = sw.asDiagonal() * cholesky_inverse(m.b_chol) * sw.asDiagonal();
    const Eigen::MatrixXd Cm = L.solve(sw.asDiagonal() * s.K);
    // d(-1/2 log|B|)/d f_hat. W = -d2 log p, so dW/df = -d3 and the sign is +.
    const Eigen::VectorXd s2 =
        0.5 * (s.K.diagonal() - Cm.colwise().squaredNorm().transpose()).cwiseProduct(d3);

    const Eigen::MatrixXd dK[2] = {s.K, kernel_lengthscale_gradient(X, X, params)};
    for (int j = 0; j < 2; ++j) {
        const double s1 = 0.5 * m.a.dot(dK[j] * m.a) - 0.5 * (R.array() * dK[j].array()).sum();
        const Eigen::VectorXd b = dK[j] * m.grad_log_lik;
        const Eigen::VectorXd s3 = b - s.K * (R * b);
        out.gradient(j) = s1 + s2.dot(s3);
    }
    return out;
}

HyperparamFit optimize_laplace(const Eigen::MatrixXd& X, std::span<const int> labels,
                               const KernelParams& init, const OptimizerConfig& config) {
    const ObjectiveFn objective = [&](const Eigen::VectorXd& theta) {
        const LmlEvaluation e = laplace_evidence_and_gradient(X, labels, {theta(0), theta(1)});
        return Objective{-e.value, -e.gradient};
    };
    Eigen::VectorXd theta0(2);
    theta0 << init.log_variance, init.log_lengthscale;
    const auto starts = restart_points(theta0, median_heuristic(X), config);
    const RestartResult best =
        minimize_kernel_objective(objective, starts, lengthscale_log_floor(X, config), config);
    HyperparamFit fit;
    fit.kernel = {best.best.x(0), best.best.x(1)};
    fit.noise = NoiseModel::heteroskedastic(Eigen::MatrixXd());  // no Gaussian noise
    fit.objective = -best.best.value;
    fit.iterations = best.best.iterations;
    fit.evaluations = best.total_evaluations;
    fit.restarts_succeeded = best.succeeded;
    return fit;
}

}  // namespace gpd
