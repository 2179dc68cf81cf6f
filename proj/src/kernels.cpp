#include "gpd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gpd/errors.hpp"

namespace gpd {

KernelParams KernelParams::from_natural(double variance, double lengthscale) {
    if (!(variance > 0.0) || !(lengthscale > 0.0)) {
        throw InputError("kernel variance and lengthscale must be positive");
    }
    return {std::log(variance), std::log(lengthscale)};
}

double KernelParams::variance() const { return std::exp(log_variance); }
double KernelParams::lengthscale() const { return std::exp(log_lengthscale); }
bool KernelParams::finite() const {
    return std::isfinite(log_variance) && std::isfinite(log_lengthscale);
}

namespace {

void check_columns(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X_prime) {
    if (X.cols() != X_prime.cols()) {
        throw InputError("kernel inputs have different feature dimensions (" +
                         std::to_string(X.cols()) + " vs " + std::to_string(X_prime.cols()) + ")");
    }
}

inline double row_sqdist(const Eigen::MatrixXd& X, Eigen::Index i, const Eigen::MatrixXd& Y,
                         Eigen::Index j) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
        const double diff = X(i, k) - Y(j, k);
        acc += diff * diff;
    }
    return acc;
}

inline double kernel_entry(const Eigen::MatrixXd& X, Eigen::Index i, const Eigen::MatrixXd& Y,
                           Eigen::Index j, double variance, double inv_two_l2) {
    return variance * std::exp(-row_sqdist(X, i, Y, j) * inv_two_l2);
}

}  // namespace

double rbf(const Eigen::Ref<const Eigen::VectorXd>& x,
           const Eigen::Ref<const Eigen::VectorXd>& x_prime, const KernelParams& params) {
    if (x.size() != x_prime.size() || x.size() == 0) {
        throw InputError("rbf: inputs must have equal, non-zero dimension");
    }
    const double l = params.lengthscale();
    return params.variance() * std::exp(-(x - x_prime).squaredNorm() / (2.0 * l * l));
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X_prime) {
    check_columns(X, X_prime);
    Eigen::MatrixXd D(X.rows(), X_prime.rows());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X_prime.rows(); ++j) {
            D(i, j) = row_sqdist(X, i, X_prime, j);
        }
    }
    return D;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X_prime,
                              const KernelParams& params) {
    check_columns(X, X_prime);
    const double variance = params.variance();
    const double l = params.lengthscale();
    const double inv_two_l2 = 1.0 / (2.0 * l * l);
    Eigen::MatrixXd K(X.rows(), X_prime.rows());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X_prime.rows(); ++j) {
            K(i, j) = kernel_entry(X, i, X_prime, j, variance, inv_two_l2);
        }
    }
    return K;
}

Eigen::MatrixXd kernel_matrix_serial(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X_prime,
                                     const KernelParams& params) {
    check_columns(X, X_prime);
    const double variance = params.variance();
    const double l = params.lengthscale();
    const double inv_two_l2 = 1.0 / (2.0 * l * l);
    Eigen::MatrixXd K(X.rows(), X_prime.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X_prime.rows(); ++j) {
            K(i, j) = kernel_entry(X, i, X_prime, j, variance, inv_two_l2);
        }
    }
    return K;
}

Eigen::MatrixXd kernel_lengthscale_gradient(const Eigen::MatrixXd& X,
                                            const Eigen::MatrixXd& X_prime,
                                            const KernelParams& params) {
    check_columns(X, X_prime);
    const double variance = params.variance();
    const double l2 = params.lengthscale() * params.lengthscale();
    Eigen::MatrixXd G(X.rows(), X_prime.rows());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X_prime.rows(); ++j) {
            const double r2 = row_sqdist(X, i, X_prime, j) / l2;
            G(i, j) = variance * std::exp(-0.5 * r2) * r2;
        }
    }
    return G;
}

KernelGradients kernel_gradients(const Eigen::MatrixXd& X, const KernelParams& params) {
    if (X.rows() < 1) throw InputError("kernel_gradients: need at least one input");
    return {kernel_matrix(X, X, params), kernel_lengthscale_gradient(X, X, params)};
}

double median_heuristic(const Eigen::MatrixXd& X) {
    constexpr Eigen::Index kMaxRows = 1000;
    const Eigen::Index n = X.rows();
    if (n < 2) return 1.0;
    std::vector<Eigen::Index> rows;
    if (n <= kMaxRows) {
        rows.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
    } else {
        for (Eigen::Index k = 0; k < kMaxRows; ++k) rows.push_back(k * n / kMaxRows);
    }
    std::vector<double> dists;
    dists.reserve(rows.size() * (rows.size() - 1) / 2);
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = a + 1; b < rows.size(); ++b) {
            dists.push_back(std::sqrt(row_sqdist(X, rows[a], X, rows[b])));
        }
    }
    auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    const double med = *mid;
    return med > 0.0 ? med : 1.0;
}

}  // namespace gpd
