#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Lcg {
    std::uint64_t state;
    double uniform() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return (static_cast<double>(state >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }
};

double logistic(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double normal_pdf(double x, double mean, double var) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * kPi * var);
}

}  // namespace

Mat zeros(std::size_t r, std::size_t c) { return Mat(r, Vec(c, 0.0)); }

Mat identity(std::size_t n) {
    Mat I = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) I[i][i] = 1.0;
    return I;
}

Mat transpose(const Mat& A) {
    if (A.empty()) return {};
    Mat T = zeros(A[0].size(), A.size());
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = 0; j < A[0].size(); ++j) T[j][i] = A[i][j];
    return T;
}

Mat multiply(const Mat& A, const Mat& B) {
    Mat C = zeros(A.size(), B.empty() ? 0 : B[0].size());
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t k = 0; k < B.size(); ++k)
            for (std::size_t j = 0; j < C[i].size(); ++j) C[i][j] += A[i][k] * B[k][j];
    return C;
}

Vec multiply(const Mat& A, const Vec& x) {
    Vec y(A.size(), 0.0);
    for (std::size_t i = 0; i < A.size(); ++i) y[i] = dot(A[i], x);
    return y;
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Inverse gauss_inverse(const Mat& A_in) {
    const std::size_t n = A_in.size();
    Mat A = A_in;
    Mat B = identity(n);
    double scale = 0.0;
    for (const auto& row : A)
        for (double v : row) scale = std::max(scale, std::abs(v));
    double log_det = 0.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        if (!(std::abs(A[piv][col]) > 1e-13 * scale)) throw std::runtime_error("singular matrix");
        std::swap(A[piv], A[col]);
        std::swap(B[piv], B[col]);
        const double p = A[col][col];
        log_det += std::log(std::abs(p));
        for (std::size_t j = 0; j < n; ++j) {
            A[col][j] /= p;
            B[col][j] /= p;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = A[r][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                A[r][j] -= f * A[col][j];
                B[r][j] -= f * B[col][j];
            }
        }
    }
    return {B, log_det};
}

double rbf(const Vec& x, const Vec& y, double variance, double lengthscale) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) d2 += (x[k] - y[k]) * (x[k] - y[k]);
    return variance * std::exp(-0.5 * d2 / (lengthscale * lengthscale));
}

Mat kernel(const Mat& X, const Mat& Y, double variance, double lengthscale) {
    Mat K = zeros(X.size(), Y.size());
    for (std::size_t i = 0; i < X.size(); ++i)
        for (std::size_t j = 0; j < Y.size(); ++j) K[i][j] = rbf(X[i], Y[j], variance, lengthscale);
    return K;
}

DenseGp dense_gp_oracle(const Mat& X, const Vec& y, const Vec& noise, double variance, double lengthscale,
                        double jitter) {
    DenseGp gp{X, variance, lengthscale, {}, {}, 0.0};
    Mat A = kernel(X, X, variance, lengthscale);
    for (std::size_t i = 0; i < X.size(); ++i) A[i][i] += noise[i] + jitter * variance;
    const Inverse inv = gauss_inverse(A);
    gp.inv = inv.inverse;
    gp.alpha = multiply(gp.inv, y);
    gp.lml = -0.5 * dot(y, gp.alpha) - 0.5 * inv.log_abs_det -
             0.5 * static_cast<double>(X.size()) * std::log(2.0 * kPi);
    return gp;
}

double DenseGp::mean(const Vec& x) const {
    Vec k(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) k[i] = rbf(X[i], x, variance, lengthscale);
    return dot(k, alpha);
}

double DenseGp::var(const Vec& x) const {
    Vec k(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) k[i] = rbf(X[i], x, variance, lengthscale);
    return variance - dot(k, multiply(inv, k));
}

double sparse_bound_oracle(const Mat& X, const Mat& Z, const Vec& y, const Vec& noise, double variance,
                           double lengthscale) {
    const std::size_t n = X.size();
    Mat Kmm = kernel(Z, Z, variance, lengthscale);
    for (std::size_t i = 0; i < Z.size(); ++i) Kmm[i][i] += 1e-8 * variance;
    Mat Knm = kernel(X, Z, variance, lengthscale);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < Z.size(); ++j)
            if (X[i] == Z[j]) Knm[i][j] += 1e-8 * variance;
    const Mat Q = multiply(multiply(Knm, gauss_inverse(Kmm).inverse), transpose(Knm));
    Mat A = Q;
    for (std::size_t i = 0; i < n; ++i) A[i][i] += noise[i];
    const Inverse inv = gauss_inverse(A);
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += (variance * (1.0 + 1e-8) - Q[i][i]) / noise[i];
    return -0.5 * dot(y, multiply(inv.inverse, y)) - 0.5 * inv.log_abs_det -
           0.5 * static_cast<double>(n) * std::log(2.0 * kPi) - 0.5 * trace;
}

double binary_softmax_oracle(double m0, double m1, double v0, double v1) {
    const double mean = m1 - m0;
    const double var = v0 + v1;
    if (var == 0.0) return logistic(mean);
    const double sd = std::sqrt(var);
    const int N = 20001;
    const double lo = mean - 12.0 * sd;
    const double h = 24.0 * sd / (N - 1);
    double s = 0.0;
    for (int k = 0; k < N; ++k) {
        const double d = lo + k * h;
        const double w = (k == 0 || k == N - 1) ? 0.5 : 1.0;
        s += w * logistic(d) * normal_pdf(d, mean, var);
    }
    return s * h;
}

Vec softmax_mc_oracle(const Vec& means, const Vec& vars, long samples, std::uint64_t seed) {
    Lcg rng{seed * 2654435761ULL + 1};
    const std::size_t C = means.size();
    Vec acc(C, 0.0), f(C);
    for (long s = 0; s < samples; ++s) {
        double mx = -1e300;
        for (std::size_t c = 0; c < C; ++c) {
            f[c] = means[c] + std::sqrt(vars[c]) * rng.normal();
            mx = std::max(mx, f[c]);
        }
        double z = 0.0;
        for (std::size_t c = 0; c < C; ++c) z += std::exp(f[c] - mx);
        for (std::size_t c = 0; c < C; ++c) acc[c] += std::exp(f[c] - mx) / z;
    }
    for (double& a : acc) a /= static_cast<double>(samples);
    return acc;
}

OnePointLogistic one_point_logistic_oracle(int y, double variance, double k_star, double k_ss) {
    const int N = 4001;
    const double lo = -8.0, hi = 8.0, h = (hi - lo) / (N - 1);
    // Posterior over f (up to normalization) on the grid.
    Vec grid(N), post(N);
    double Z = 0.0;
    for (int k = 0; k < N; ++k) {
        const double f = lo + k * h;
        grid[k] = f;
        const double lik = y == 1 ? logistic(f) : logistic(-f);
        post[k] = lik * normal_pdf(f, 0.0, variance);
        Z += ((k == 0 || k == N - 1) ? 0.5 : 1.0) * post[k];
    }
    Z *= h;
    // f* | f ~ N(k_star / a^2 f, k_ss - k_star^2 / a^2); integrate sigmoid(f*) on the same grid.
    const double cond_var = k_ss - k_star * k_star / variance;
    double pred = 0.0;
    for (int k = 0; k < N; ++k) {
        const double cm = k_star / variance * grid[k];
        double inner = 0.0;
        if (cond_var <= 1e-14) {
            inner = logistic(cm);
        } else {
            for (int j = 0; j < N; ++j) {
                const double w = (j == 0 || j == N - 1) ? 0.5 : 1.0;
                inner += w * logistic(grid[j]) * normal_pdf(grid[j], cm, cond_var);
            }
            inner *= h;
        }
        pred += ((k == 0 || k == N - 1) ? 0.5 : 1.0) * post[k] * inner;
    }
    pred *= h / Z;
    return {pred, std::log(Z)};
}

Vec lognormal_mc_moments(double mu, double s2, long draws, std::uint64_t seed) {
    // Importance sampling from N(mu + 1.5 s2, 2 s2): plain draws cannot resolve
    // the second moment once s2 is a few units (kurtosis ~ exp(4 s2)).
    Lcg rng{seed * 0x9E3779B97F4A7C15ULL + 7};
    const double qm = mu + 1.5 * s2;
    const double qv = 2.0 * s2;
    double m1 = 0.0, m2 = 0.0;
    for (long k = 0; k < draws; ++k) {
        const double z = qm + std::sqrt(qv) * rng.normal();
        const double w = normal_pdf(z, mu, s2) / normal_pdf(z, qm, qv);
        const double v = std::exp(z);
        m1 += w * v;
        m2 += w * v * v;
    }
    m1 /= static_cast<double>(draws);
    m2 /= static_cast<double>(draws);
    return {m1, m2 - m1 * m1};
}

}  // namespace oracle
