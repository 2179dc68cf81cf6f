#include "gpd/gp_sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "gpd/errors.hpp"
#include "gpd/optimize.hpp"

namespace gpd {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double row_sqdist(const Eigen::MatrixXd& A, Eigen::Index i, const Eigen::MatrixXd& B,
                  Eigen::Index j) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < A.cols(); ++k) {
        const double d = A(i, k) - B(j, k);
        acc += d * d;
    }
    return acc;
}

int nearest_of(const Eigen::MatrixXd& X, Eigen::Index i, const Eigen::MatrixXd& centroids) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
        const double d = row_sqdist(X, i, centroids, k);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

/// Nudges exactly repeated rows apart so K_mm stays factorizable.
void separate_duplicates(Eigen::MatrixXd& Z, std::uint64_t seed) {
    const Eigen::Index m = Z.rows();
    if (m < 2) return;
    Eigen::VectorXd scale = ((Z.rowwise() - Z.colwise().mean()).array().square().colwise().mean())
                                .sqrt()
                                .transpose();
    for (Eigen::Index k = 0; k < scale.size(); ++k) {
        if (!(scale(k) > 0.0)) scale(k) = 1.0;
    }
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 1; i < m; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            if (row_sqdist(Z, i, Z, j) == 0.0) {
                for (Eigen::Index k = 0; k < Z.cols(); ++k) Z(i, k) += 1e-6 * scale(k) * normal(rng);
                j = -1;  // recheck against every earlier row
            }
        }
    }
}

void check_inducing(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z) {
    if (Z.rows() < 1) throw InputError("need at least one inducing point");
    if (Z.cols() != X.cols()) throw InputError("inducing inputs have the wrong feature dimension");
    if (!Z.allFinite()) throw InputError("inducing inputs are not finite");
}

void check_targets(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets) {
    if (targets.rows() != X.rows()) throw InputError("targets and inputs disagree in row count");
    if (targets.cols() < 1) throw InputError("targets need at least one column");
    if (!X.allFinite() || !targets.allFinite()) throw InputError("non-finite inputs or targets");
}

JitteredCholesky plain_cholesky(const Eigen::MatrixXd& B, const char* what) {
    JitteredCholesky out;
    out.llt.compute(B);
    if (out.llt.info() != Eigen::Success) throw NumericalError(std::string(what) + ": Cholesky failed");
    return out;
}

/// Quantities shared by the bound, its gradient and the posterior for one
/// noise column and the classes that use it.
struct NoiseBlock {
    Eigen::VectorXd s;          // noise variances
    Eigen::VectorXd inv_sqrt_s;
    Eigen::MatrixXd A;          // L_m^-1 K_mn S^-1/2
    JitteredCholesky b;         // chol(I + A A^T)
};

// Training cross-covariance. The K_mm jitter is treated as white noise on the
// inducing outputs, so a training input that coincides with an inducing input
// shares it; with Z = X this reproduces the jittered exact model.
Eigen::MatrixXd training_cross(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                               const KernelParams& params, double jitter) {
    Eigen::MatrixXd K = kernel_matrix(X, Z, params);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < Z.rows(); ++j) {
            if (X.row(i) == Z.row(j)) K(i, j) += jitter;
        }
    }
    return K;
}

NoiseBlock make_block(const Eigen::MatrixXd& V, Eigen::VectorXd s) {
    NoiseBlock blk;
    blk.inv_sqrt_s = s.array().rsqrt();
    blk.s = std::move(s);
    blk.A = V * blk.inv_sqrt_s.asDiagonal();
    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(V.rows(), V.rows());
    B.selfadjointView<Eigen::Lower>().rankUpdate(blk.A);
    B.triangularView<Eigen::StrictlyUpper>() = B.transpose();
    blk.b = plain_cholesky(B, "sparse bound");
    return blk;
}

Eigen::VectorXd pack(const KernelParams& k, const NoiseModel& noise) {
    Eigen::VectorXd theta(noise.is_homoskedastic() ? 3 : 2);
    theta(0) = k.log_variance;
    theta(1) = k.log_lengthscale;
    if (noise.is_homoskedastic()) theta(2) = noise.log_noise_variance();
    return theta;
}

}  // namespace

std::vector<int> nearest_centroid(const Eigen::MatrixXd& X, const Eigen::MatrixXd& centroids) {
    std::vector<int> assign(static_cast<std::size_t>(X.rows()));
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        assign[static_cast<std::size_t>(i)] = nearest_of(X, i, centroids);
    }
    return assign;
}

std::vector<int> nearest_centroid_serial(const Eigen::MatrixXd& X, const Eigen::MatrixXd& centroids) {
    std::vector<int> assign(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        assign[static_cast<std::size_t>(i)] = nearest_of(X, i, centroids);
    }
    return assign;
}

InducingSet kmeans_inducing(const Eigen::MatrixXd& X, int m, std::uint64_t seed) {
    const Eigen::Index n = X.rows();
    if (m < 1 || m > n) {
        throw InputError("kmeans_inducing: need 1 <= m <= n (m=" + std::to_string(m) +
                         ", n=" + std::to_string(n) + ")");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // k-means++ seeding.
    Eigen::MatrixXd C(m, X.cols());
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    C.row(0) = X.row(pick(rng));
    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = row_sqdist(X, i, C, 0);
    for (int k = 1; k < m; ++k) {
        const double total = d2.sum();
        Eigen::Index chosen = 0;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            chosen = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc > target && d2(i) > 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        C.row(k) = X.row(chosen);
        for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), row_sqdist(X, i, C, k));
    }

    constexpr int kMaxIterations = 50;
    constexpr double kShiftTolerance = 1e-6;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        const std::vector<int> assign = nearest_centroid(X, C);
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(m, X.cols());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(m), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int a = assign[static_cast<std::size_t>(i)];
            sums.row(a) += X.row(i);
            ++counts[static_cast<std::size_t>(a)];
        }
        Eigen::MatrixXd next(m, X.cols());
        std::vector<bool> taken(static_cast<std::size_t>(n), false);
        for (int k = 0; k < m; ++k) {
            const auto cnt = counts[static_cast<std::size_t>(k)];
            if (cnt > 0) {
                next.row(k) = sums.row(k) / static_cast<double>(cnt);
                continue;
            }
            // Empty cluster: restart it at the worst-served point.
            Eigen::Index far = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (taken[static_cast<std::size_t>(i)]) continue;
                const double d = row_sqdist(X, i, C, assign[static_cast<std::size_t>(i)]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            taken[static_cast<std::size_t>(far)] = true;
            next.row(k) = X.row(far);
        }
        const double shift = (next - C).rowwise().norm().maxCoeff();
        C = std::move(next);
        if (shift < kShiftTolerance) break;
    }
    separate_duplicates(C, seed);
    return {std::move(C), InducingSelection::kmeans, seed};
}

InducingSet uniform_inducing(const Eigen::MatrixXd& X, int m, std::uint64_t seed) {
    const Eigen::Index n = X.rows();
    if (m < 1 || m > n) throw InputError("uniform_inducing: need 1 <= m <= n");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    for (int k = 0; k < m; ++k) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), idx.size() - 1);
        std::swap(idx[static_cast<std::size_t>(k)], idx[pick(rng)]);
    }
    Eigen::MatrixXd Z(m, X.cols());
    for (int k = 0; k < m; ++k) Z.row(k) = X.row(idx[static_cast<std::size_t>(k)]);
    separate_duplicates(Z, seed);
    return {std::move(Z), InducingSelection::uniform, seed};
}

InducingSet explicit_inducing(Eigen::MatrixXd Z) {
    if (Z.rows() < 1) throw InputError("explicit_inducing: empty inducing set");
    separate_duplicates(Z, 0);
    return {std::move(Z), InducingSelection::explicit_points, 0};
}

LmlEvaluation sparse_bound_value_and_gradient(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                                              const Eigen::MatrixXd& targets,
                                              const NoiseModel& noise, const KernelParams& params) {
    check_targets(X, targets);
    check_inducing(X, Z);
    noise.validate(X.rows(), targets.cols());
    const Eigen::Index n = X.rows();
    const Eigen::Index C = targets.cols();
    const bool homo = noise.is_homoskedastic();
    const double a2 = params.variance();
    LmlEvaluation out{0.0, Eigen::VectorXd::Zero(homo ? 3 : 2)};
    if (n == 0) return out;

    const Eigen::MatrixXd Kmm = kernel_matrix(Z, Z, params);
    const JitteredCholesky Lm = cholesky_with_jitter(Kmm, a2, "sparse bound K_mm");
    // Prior variance of the training latents including the jitter noise.
    const double knn = a2 + Lm.jitter;
    const Eigen::MatrixXd Knm = training_cross(X, Z, params, Lm.jitter);
    Eigen::MatrixXd dKmm_dv = Kmm;
    dKmm_dv.diagonal().array() += Lm.jitter;
    const Eigen::MatrixXd dKnm_dl = kernel_lengthscale_gradient(X, Z, params);
    const Eigen::MatrixXd dKmm_dl = kernel_lengthscale_gradient(Z, Z, params);

    const Eigen::MatrixXd V = Lm.llt.matrixL().solve(Knm.transpose());  // m x n
    const Eigen::MatrixXd P = Lm.llt.matrixU().solve(V);                // K_mm^-1 K_mn
    const Eigen::VectorXd q_diag = V.colwise().squaredNorm().transpose();

    auto accumulate = [&](const NoiseBlock& blk, Eigen::Index c) {
        const Eigen::VectorXd ys = targets.col(c).cwiseProduct(blk.inv_sqrt_s);
        const Eigen::VectorXd cvec = blk.b.llt.matrixL().solve(blk.A * ys);
        const double logdet = blk.s.array().log().sum() + blk.b.log_determinant();
        const double quad = ys.squaredNorm() - cvec.squaredNorm();
        const double trace = (knn / blk.s.array()).sum() - blk.A.squaredNorm();
        out.value += -0.5 * quad - 0.5 * logdet - 0.5 * n * kLog2Pi - 0.5 * trace;

        // H = P G with G = beta beta^T + S^-1/2 D^T D S^-1/2, D = L_B^-1 A.
        const Eigen::MatrixXd D = blk.b.llt.matrixL().solve(blk.A);
        const Eigen::VectorXd beta = (ys - D.transpose() * cvec).cwiseProduct(blk.inv_sqrt_s);
        const Eigen::MatrixXd ADt = blk.A * D.transpose();
        Eigen::MatrixXd H = Lm.llt.matrixU().solve(ADt * D) * blk.inv_sqrt_s.asDiagonal();
        H.noalias() += (P * beta) * beta.transpose();
        const Eigen::MatrixXd HPt = H * P.transpose();

        out.gradient(0) += (H.array() * Knm.transpose().array()).sum() -
                           0.5 * (HPt.array() * dKmm_dv.array()).sum() -
                           0.5 * (knn / blk.s.array()).sum();
        out.gradient(1) += (H.array() * dKnm_dl.transpose().array()).sum() -
                           0.5 * (HPt.array() * dKmm_dl.array()).sum();
        if (homo) {
            const double sn2 = noise.noise_variance();
            const double tr_inv = (1.0 / blk.s.array()).sum() -
                                  (D * blk.inv_sqrt_s.asDiagonal()).squaredNorm();
            out.gradient(2) += 0.5 * sn2 * (beta.squaredNorm() - tr_inv) +
                               0.5 * sn2 * ((knn - q_diag.array()) / blk.s.array().square()).sum();
        }
    };

    if (homo) {
        const NoiseBlock blk = make_block(V, noise.column(0, n));
        for (Eigen::Index c = 0; c < C; ++c) accumulate(blk, c);
    } else {
        for (Eigen::Index c = 0; c < C; ++c) accumulate(make_block(V, noise.column(c, n)), c);
    }
    return out;
}

double sparse_bound(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                    const Eigen::MatrixXd& targets, const NoiseModel& noise,
                    const KernelParams& params) {
    return sparse_bound_value_and_gradient(X, Z, targets, noise, params).value;
}

double sparse_bound(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                    const TransformedTargets& targets, const KernelParams& params) {
    return sparse_bound(X, Z, targets.y_tilde, NoiseModel::heteroskedastic(targets.sigma2_tilde),
                        params);
}

const JitteredCholesky& SparsePosterior::b_factor_for(Eigen::Index c) const {
    return b_chol.size() == 1 ? b_chol.front() : b_chol[static_cast<std::size_t>(c)];
}

SparsePosterior::InducingMarginal SparsePosterior::inducing_posterior(Eigen::Index c) const {
    const auto Lm = kmm.llt.matrixL();
    const JitteredCholesky& b = b_factor_for(c);
    InducingMarginal q;
    q.mean = Lm * b.llt.matrixU().solve(this->c.col(c));
    const Eigen::MatrixXd LmT = kmm.llt.matrixU();
    const Eigen::MatrixXd W = b.llt.matrixL().solve(LmT);  // L_B^-1 L_m^T
    q.covariance = W.transpose() * W;
    return q;
}

SparsePosterior fit_sparse(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                           const Eigen::MatrixXd& targets, const NoiseModel& noise,
                           const KernelParams& params) {
    check_targets(X, targets);
    check_inducing(X, Z);
    noise.validate(X.rows(), targets.cols());
    if (!params.finite()) throw InputError("kernel parameters are not finite");
    const Eigen::Index n = X.rows();
    const Eigen::Index C = targets.cols();

    SparsePosterior post;
    post.inducing = Z;
    post.params = params;
    post.noise = noise;
    post.num_classes = static_cast<int>(C);
    post.kmm = cholesky_with_jitter(kernel_matrix(Z, Z, params), params.variance(), "fit_sparse K_mm");
    post.c = Eigen::MatrixXd::Zero(Z.rows(), C);
    if (n == 0) {
        post.b_chol.push_back(plain_cholesky(Eigen::MatrixXd::Identity(Z.rows(), Z.rows()), "fit_sparse"));
        return post;
    }
    const Eigen::MatrixXd V =
        post.kmm.llt.matrixL().solve(training_cross(X, Z, params, post.kmm.jitter).transpose());
    auto solve_class = [&](const NoiseBlock& blk, Eigen::Index c) {
        const Eigen::VectorXd ys = targets.col(c).cwiseProduct(blk.inv_sqrt_s);
        post.c.col(c) = blk.b.llt.matrixL().solve(blk.A * ys);
    };
    if (noise.is_homoskedastic()) {
        NoiseBlock blk = make_block(V, noise.column(0, n));
        for (Eigen::Index c = 0; c < C; ++c) solve_class(blk, c);
        post.b_chol.push_back(std::move(blk.b));
    } else {
        for (Eigen::Index c = 0; c < C; ++c) {
            NoiseBlock blk = make_block(V, noise.column(c, n));
            solve_class(blk, c);
            post.b_chol.push_back(std::move(blk.b));
        }
    }
    return post;
}

SparsePosterior fit_sparse(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                           const TransformedTargets& targets, const KernelParams& params) {
    return fit_sparse(X, Z, targets.y_tilde, NoiseModel::heteroskedastic(targets.sigma2_tilde),
                      params);
}

LatentPrediction predict_latent(const SparsePosterior& model, const Eigen::MatrixXd& X_star) {
    if (X_star.cols() != model.inducing.cols()) {
        throw InputError("predict_latent: feature dimension mismatch");
    }
    const Eigen::Index q = X_star.rows();
    const Eigen::Index C = model.num_classes;
    const double prior = model.params.variance();
    const Eigen::MatrixXd W =
        model.kmm.llt.matrixL().solve(kernel_matrix(model.inducing, X_star, model.params));
    const Eigen::ArrayXd w_norm = W.colwise().squaredNorm().transpose().array();
    LatentPrediction out{Eigen::MatrixXd(q, C), Eigen::MatrixXd(q, C)};
    const double floor = 1e-12 * prior;
    for (Eigen::Index c = 0; c < C; ++c) {
        const JitteredCholesky& b = model.b_factor_for(c);
        out.means.col(c) = W.transpose() * b.llt.matrixU().solve(model.c.col(c));
        if (c > 0 && model.b_chol.size() == 1) {
            out.variances.col(c) = out.variances.col(0);
            continue;
        }
        const Eigen::MatrixXd BW = b.llt.matrixL().solve(W);
        out.variances.col(c) =
            (prior - w_norm + BW.colwise().squaredNorm().transpose().array()).max(floor).matrix();
    }
    return out;
}

HyperparamFit optimize_sparse(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                              const Eigen::MatrixXd& targets, const NoiseModel& noise_init,
                              const KernelParams& init, const OptimizerConfig& config) {
    check_targets(X, targets);
    check_inducing(X, Z);
    noise_init.validate(X.rows(), targets.cols());
    auto noise_of = [&](const Eigen::VectorXd& theta) {
        return noise_init.is_homoskedastic() ? NoiseModel::homoskedastic(theta(2)) : noise_init;
    };
    const ObjectiveFn objective = [&](const Eigen::VectorXd& theta) {
        const LmlEvaluation e = sparse_bound_value_and_gradient(X, Z, targets, noise_of(theta),
                                                                {theta(0), theta(1)});
        return Objective{-e.value, -e.gradient};
    };
    const auto starts = restart_points(pack(init, noise_init), median_heuristic(X), config);
    const RestartResult best =
        minimize_kernel_objective(objective, starts, lengthscale_log_floor(X, config), config);
    HyperparamFit fit;
    fit.kernel = {best.best.x(0), best.best.x(1)};
    fit.noise = noise_of(best.best.x);
    fit.objective = -best.best.value;
    fit.iterations = best.best.iterations;
    fit.evaluations = best.total_evaluations;
    fit.restarts_succeeded = best.succeeded;
    return fit;
}

LatentPrediction predict_latent(const PosteriorModel& model, const Eigen::MatrixXd& X_star) {
    return std::visit([&](const auto& m) { return predict_latent(m, X_star); }, model);
}

}  // namespace gpd
