#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace gpd {

/// Base diagonal jitter, relative to the kernel variance.
inline constexpr double kBaseJitter = 1e-8;
/// Largest relative jitter tried before giving up.
inline constexpr double kMaxJitter = 1e-4;

struct JitteredCholesky {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;  // absolute amount added to the diagonal

    [[nodiscard]] double log_determinant() const;
};

/// Factorizes A + jitter*I, starting from kBaseJitter*scale and escalating by
/// decades up to kMaxJitter*scale. Throws NumericalError if all attempts fail.
[[nodiscard]] JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& A, double scale,
                                                    std::string_view what);

/// Inverse of the factorized matrix (symmetric, dense).
[[nodiscard]] Eigen::MatrixXd cholesky_inverse(const Eigen::LLT<Eigen::MatrixXd>& llt);

}  // namespace gpd
