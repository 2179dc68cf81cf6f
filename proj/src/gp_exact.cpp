#include "gpd/gp_exact.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "gpd/errors.hpp"
#include "gpd/optimize.hpp"

namespace gpd {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_targets(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets) {
    if (targets.rows() != X.rows()) {
        throw InputError("targets have " + std::to_string(targets.rows()) + " rows but inputs have " +
                         std::to_string(X.rows()));
    }
    if (targets.cols() < 1) throw InputError("targets need at least one column");
    if (!X.allFinite() || !targets.allFinite()) throw InputError("non-finite inputs or targets");
}

Eigen::VectorXd pack(const KernelParams& k, const NoiseModel& noise) {
    Eigen::VectorXd theta(noise.is_homoskedastic() ? 3 : 2);
    theta(0) = k.log_variance;
    theta(1) = k.log_lengthscale;
    if (noise.is_homoskedastic()) theta(2) = noise.log_noise_variance();
    return theta;
}

KernelParams unpack_kernel(const Eigen::VectorXd& theta) { return {theta(0), theta(1)}; }

NoiseModel unpack_noise(const Eigen::VectorXd& theta, const NoiseModel& like) {
    return like.is_homoskedastic() ? NoiseModel::homoskedastic(theta(2)) : like;
}

}  // namespace

NoiseModel NoiseModel::heteroskedastic(Eigen::MatrixXd variances) {
    return NoiseModel{Heteroskedastic{std::move(variances)}};
}

NoiseModel NoiseModel::homoskedastic(double log_noise_variance) {
    return NoiseModel{Homoskedastic{log_noise_variance}};
}

bool NoiseModel::is_homoskedastic() const {
    return std::holds_alternative<Homoskedastic>(kind_);
}

double NoiseModel::noise_variance() const { return std::exp(log_noise_variance()); }

double NoiseModel::log_noise_variance() const {
    return std::get<Homoskedastic>(kind_).log_noise_variance;
}

const Eigen::MatrixXd& NoiseModel::variances() const {
    return std::get<Heteroskedastic>(kind_).variances;
}

Eigen::VectorXd NoiseModel::column(Eigen::Index c, Eigen::Index n) const {
    if (is_homoskedastic()) return Eigen::VectorXd::Constant(n, noise_variance());
    return variances().col(c);
}

void NoiseModel::validate(Eigen::Index n, Eigen::Index num_classes) const {
    if (is_homoskedastic()) {
        if (!std::isfinite(log_noise_variance())) throw InputError("noise variance is not finite");
        return;
    }
    const Eigen::MatrixXd& v = variances();
    if (v.rows() != n || v.cols() != num_classes) {
        throw InputError("heteroskedastic variances must be " + std::to_string(n) + " x " +
                         std::to_string(num_classes));
    }
    if (!v.allFinite() || (v.array() <= 0.0).any()) {
        throw InputError("heteroskedastic variances must be finite and positive");
    }
}

const JitteredCholesky& ExactPosterior::factor_for(Eigen::Index c) const {
    return chol.size() == 1 ? chol.front() : chol[static_cast<std::size_t>(c)];
}

ExactPosterior fit_exact(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
                         const NoiseModel& noise, const KernelParams& params) {
    check_targets(X, targets);
    noise.validate(X.rows(), targets.cols());
    if (!params.finite()) throw InputError("kernel parameters are not finite");

    const Eigen::Index n = X.rows();
    const Eigen::Index C = targets.cols();
    ExactPosterior model;
    model.train_inputs = X;
    model.params = params;
    model.noise = noise;
    model.num_classes = static_cast<int>(C);
    model.alpha_solve.resize(n, C);
    if (n == 0) return model;

    const Eigen::MatrixXd K = kernel_matrix(X, X, params);
    const std::size_t factors = noise.is_homoskedastic() ? 1 : static_cast<std::size_t>(C);
    model.chol.reserve(factors);
    for (std::size_t f = 0; f < factors; ++f) {
        Eigen::MatrixXd A = K;
        A.diagonal() += noise.column(static_cast<Eigen::Index>(f), n);
        model.chol.push_back(cholesky_with_jitter(A, params.variance(), "fit_exact"));
    }
    for (Eigen::Index c = 0; c < C; ++c) {
        model.alpha_solve.col(c) = model.factor_for(c).llt.solve(targets.col(c));
    }
    return model;
}

ExactPosterior fit_exact(const Eigen::MatrixXd& X, const TransformedTargets& targets,
                         const KernelParams& params) {
    return fit_exact(X, targets.y_tilde, NoiseModel::heteroskedastic(targets.sigma2_tilde), params);
}

LatentPrediction predict_latent(const ExactPosterior& model, const Eigen::MatrixXd& X_star) {
    const Eigen::Index m = X_star.rows();
    const Eigen::Index C = model.num_classes;
    const double prior = model.params.variance();
    LatentPrediction out{Eigen::MatrixXd::Zero(m, C), Eigen::MatrixXd::Constant(m, C, prior)};
    if (model.train_inputs.rows() == 0) {
        if (X_star.cols() != model.train_inputs.cols() && model.train_inputs.cols() != 0) {
            throw InputError("predict_latent: feature dimension mismatch");
        }
        return out;
    }
    const Eigen::MatrixXd Kns = kernel_matrix(model.train_inputs, X_star, model.params);
    out.means = Kns.transpose() * model.alpha_solve;
    const double floor = 1e-12 * prior;
    for (Eigen::Index c = 0; c < C; ++c) {
        if (c > 0 && model.chol.size() == 1) {
            out.variances.col(c) = out.variances.col(0);
            continue;
        }
        const Eigen::MatrixXd V = model.factor_for(c).llt.matrixL().solve(Kns);
        out.variances.col(c) =
            (prior - V.colwise().squaredNorm().transpose().array()).max(floor).matrix();
    }
    return out;
}

LmlEvaluation lml_value_and_gradient(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
                                     const NoiseModel& noise, const KernelParams& params) {
    check_targets(X, targets);
    noise.validate(X.rows(), targets.cols());
    const Eigen::Index n = X.rows();
    const Eigen::Index C = targets.cols();
    const bool homo = noise.is_homoskedastic();
    LmlEvaluation out{0.0, Eigen::VectorXd::Zero(homo ? 3 : 2)};
    if (n == 0) return out;

    const Eigen::MatrixXd K = kernel_matrix(X, X, params);
    const Eigen::MatrixXd dK_dl = kernel_lengthscale_gradient(X, X, params);

    auto accumulate = [&](const Eigen::VectorXd& noise_col, Eigen::Index first, Eigen::Index count) {
        Eigen::MatrixXd A = K;
        A.diagonal() += noise_col;
        const JitteredCholesky f = cholesky_with_jitter(A, params.variance(), "lml");
        const Eigen::MatrixXd Ainv = cholesky_inverse(f.llt);
        // The jitter scales with a^2, so it belongs to the a^2 derivative.
        Eigen::MatrixXd dK_dv = K;
        dK_dv.diagonal().array() += f.jitter;
        const double logdet = f.log_determinant();
        for (Eigen::Index c = first; c < first + count; ++c) {
            const Eigen::VectorXd a = f.llt.solve(targets.col(c));
            out.value += -0.5 * targets.col(c).dot(a) - 0.5 * logdet - 0.5 * n * kLog2Pi;
            out.gradient(0) += 0.5 * a.dot(dK_dv * a);
            out.gradient(1) += 0.5 * a.dot(dK_dl * a);
            if (homo) out.gradient(2) += 0.5 * noise.noise_variance() * a.squaredNorm();
        }
        const double k = static_cast<double>(count);
        out.gradient(0) -= 0.5 * k * (Ainv.array() * dK_dv.array()).sum();
        out.gradient(1) -= 0.5 * k * (Ainv.array() * dK_dl.array()).sum();
        if (homo) out.gradient(2) -= 0.5 * k * noise.noise_variance() * Ainv.trace();
    };

    if (homo) {
        accumulate(noise.column(0, n), 0, C);
    } else {
        for (Eigen::Index c = 0; c < C; ++c) accumulate(noise.column(c, n), c, 1);
    }
    return out;
}

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
                               const NoiseModel& noise, const KernelParams& params) {
    check_targets(X, targets);
    noise.validate(X.rows(), targets.cols());
    const Eigen::Index n = X.rows();
    if (n == 0) return 0.0;
    const ExactPosterior post = fit_exact(X, targets, noise, params);
    double lml = 0.0;
    for (Eigen::Index c = 0; c < targets.cols(); ++c) {
        const JitteredCholesky& f = post.factor_for(c);
        lml += -0.5 * targets.col(c).dot(post.alpha_solve.col(c)) - 0.5 * f.log_determinant() -
               0.5 * n * kLog2Pi;
    }
    return lml;
}

Eigen::VectorXd lml_gradient(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
                             const NoiseModel& noise, const KernelParams& params) {
    return lml_value_and_gradient(X, targets, noise, params).gradient;
}

std::vector<Eigen::VectorXd> restart_points(const Eigen::VectorXd& init, double median_distance,
                                            const OptimizerConfig& config) {
    if (config.restarts < 1) throw InputError("restarts must be at least 1");
    std::vector<Eigen::VectorXd> starts{init};
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto log_uniform = [&](double lo, double hi) {
        return std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo));
    };
    for (int r = 1; r < config.restarts; ++r) {
        Eigen::VectorXd theta = init;
        theta(0) = log_uniform(0.1, 10.0);
        theta(1) = log_uniform(0.1 * median_distance, 10.0 * median_distance);
        if (theta.size() > 2) theta(2) = log_uniform(1e-3, 1.0);
        starts.push_back(std::move(theta));
    }
    return starts;
}

double lengthscale_log_floor(const Eigen::MatrixXd& X, const OptimizerConfig& config) {
    if (config.min_lengthscale_factor < 0.0) throw InputError("min_lengthscale_factor must be non-negative");
    if (config.min_lengthscale_factor == 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(config.min_lengthscale_factor * median_heuristic(X));
}

RestartResult minimize_kernel_objective(const ObjectiveFn& objective, const std::vector<Eigen::VectorXd>& starts,
                                        double log_floor, const OptimizerConfig& config) {
    const MinimizerOptions options{config.max_iterations, config.gradient_tolerance};
    if (!std::isfinite(log_floor)) return minimize_with_restarts(objective, starts, options);
    // softplus and its inverse, stable for large arguments
    auto softplus = [](double u) { return u > 30.0 ? u : std::log1p(std::exp(u)); };
    auto inv_softplus = [](double v) { return v > 30.0 ? v : std::log(std::expm1(v)); };
    auto to_theta = [&](Eigen::VectorXd u) {
        u(1) = log_floor + softplus(u(1));
        return u;
    };
    const ObjectiveFn wrapped = [&](const Eigen::VectorXd& u) {
        Objective o = objective(to_theta(u));
        o.gradient(1) *= 1.0 / (1.0 + std::exp(-u(1)));
        return o;
    };
    std::vector<Eigen::VectorXd> u_starts;
    for (Eigen::VectorXd s : starts) {
        s(1) = inv_softplus(std::max(s(1) - log_floor, 1e-3));
        u_starts.push_back(std::move(s));
    }
    RestartResult r = minimize_with_restarts(wrapped, u_starts, options);
    r.best.x = to_theta(r.best.x);
    return r;
}

HyperparamFit optimize_hyperparams(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
                                   const NoiseModel& noise_init, const KernelParams& init,
                                   const OptimizerConfig& config) {
    check_targets(X, targets);
    noise_init.validate(X.rows(), targets.cols());
    const ObjectiveFn objective = [&](const Eigen::VectorXd& theta) {
        const LmlEvaluation e =
            lml_value_and_gradient(X, targets, unpack_noise(theta, noise_init), unpack_kernel(theta));
        return Objective{-e.value, -e.gradient};
    };
    const auto starts = restart_points(pack(init, noise_init), median_heuristic(X), config);
    const RestartResult best =
        minimize_kernel_objective(objective, starts, lengthscale_log_floor(X, config), config);

    HyperparamFit fit;
    fit.kernel = unpack_kernel(best.best.x);
    fit.noise = unpack_noise(best.best.x, noise_init);
    fit.objective = -best.best.value;
    fit.iterations = best.best.iterations;
    fit.evaluations = best.total_evaluations;
    fit.restarts_succeeded = best.succeeded;
    return fit;
}

KernelParams default_kernel_init(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets) {
    double second_moment = targets.size() > 0 ? targets.array().square().mean() : 1.0;
    if (!(second_moment > 1e-6)) second_moment = 1.0;
    return {std::log(second_moment), std::log(median_heuristic(X))};
}

}  // namespace gpd
