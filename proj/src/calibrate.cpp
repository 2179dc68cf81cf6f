#include "gpd/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "gpd/errors.hpp"

namespace gpd {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void softmax_into(const Eigen::Ref<const Eigen::RowVectorXd>& f, Eigen::Ref<Eigen::RowVectorXd> out) {
    const double mx = f.maxCoeff();
    out = (f.array() - mx).exp();
    out /= out.sum();
}

/// One row of the Monte-Carlo estimate; the stream depends only on (seed, row).
void expectation_row(const Eigen::MatrixXd& means, const Eigen::MatrixXd& variances, int samples,
                     std::uint64_t seed, Eigen::Index row, Eigen::MatrixXd& probs) {
    const Eigen::Index C = means.cols();
    if ((variances.row(row).array() == 0.0).all()) {
        Eigen::RowVectorXd p(C);
        softmax_into(means.row(row), p);
        probs.row(row) = p;
        return;
    }
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(row))));
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::RowVectorXd mu = means.row(row);
    const Eigen::RowVectorXd sd = variances.row(row).array().sqrt();
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(C);
    Eigen::RowVectorXd f(C), p(C);
    for (int s = 0; s < samples; ++s) {
        for (Eigen::Index c = 0; c < C; ++c) f(c) = mu(c) + sd(c) * normal(rng);
        softmax_into(f, p);
        acc += p;
    }
    acc /= acc.sum();  // exact normalization of the average
    probs.row(row) = acc;
}

void check_latent(const Eigen::MatrixXd& means, const Eigen::MatrixXd& variances, int samples) {
    if (samples < 1) throw InputError("softmax_expectation: need at least one sample");
    if (means.rows() != variances.rows() || means.cols() != variances.cols()) {
        throw InputError("softmax_expectation: means and variances differ in shape");
    }
    if (!means.allFinite() || !variances.allFinite()) {
        throw InputError("softmax_expectation: non-finite latent moments");
    }
    if ((variances.array() < 0.0).any()) throw InputError("softmax_expectation: negative variance");
}

void check_labels(const Eigen::MatrixXd& probs, std::span<const int> labels) {
    if (probs.rows() == 0) throw InputError("empty test set");
    if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
        throw InputError("probabilities and labels differ in length");
    }
    for (int y : labels) {
        if (y < 0 || y >= probs.cols()) throw InputError("label " + std::to_string(y) + " out of range");
    }
}

double log1p_exp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

ClassProbabilities softmax_expectation(const Eigen::MatrixXd& means, const Eigen::MatrixXd& variances,
                                       int samples, std::uint64_t seed) {
    check_latent(means, variances, samples);
    ClassProbabilities out{Eigen::MatrixXd(means.rows(), means.cols()), samples, seed};
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < means.rows(); ++i) {
        expectation_row(means, variances, samples, seed, i, out.probs);
    }
    return out;
}

ClassProbabilities softmax_expectation(const LatentPrediction& latent, int samples,
                                       std::uint64_t seed) {
    return softmax_expectation(latent.means, latent.variances, samples, seed);
}

ClassProbabilities softmax_expectation_serial(const Eigen::MatrixXd& means,
                                              const Eigen::MatrixXd& variances, int samples,
                                              std::uint64_t seed) {
    check_latent(means, variances, samples);
    ClassProbabilities out{Eigen::MatrixXd(means.rows(), means.cols()), samples, seed};
    for (Eigen::Index i = 0; i < means.rows(); ++i) {
        expectation_row(means, variances, samples, seed, i, out.probs);
    }
    return out;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::RowVectorXd p(logits.cols());
        softmax_into(logits.row(i), p);
        out.row(i) = p;
    }
    return out;
}

int argmax_row(const Eigen::MatrixXd& probs, Eigen::Index row) {
    int best = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
        if (probs(row, c) > probs(row, best)) best = static_cast<int>(c);
    }
    return best;
}

double ece_from_bins(std::span<const ReliabilityBin> bins) {
    long n = 0;
    for (const auto& b : bins) n += b.count;
    if (n == 0) throw InputError("ece_from_bins: no points");
    double total = 0.0;
    for (const auto& b : bins) {
        total += static_cast<double>(b.count) / static_cast<double>(n) *
                 std::abs(b.accuracy - b.confidence);
    }
    return total;
}

EceResult ece(const Eigen::MatrixXd& probs, std::span<const int> labels, int num_bins) {
    if (num_bins < 1) throw InputError("ece: need at least one bin");
    check_labels(probs, labels);
    EceResult out;
    out.bins.resize(static_cast<std::size_t>(num_bins));
    std::vector<double> conf_sum(out.bins.size(), 0.0);
    std::vector<long> correct(out.bins.size(), 0);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const int pred = argmax_row(probs, i);
        const double conf = probs(i, pred);
        auto k = static_cast<int>(std::floor(conf * num_bins));
        k = std::clamp(k, 0, num_bins - 1);
        const auto kk = static_cast<std::size_t>(k);
        ++out.bins[kk].count;
        conf_sum[kk] += conf;
        if (pred == labels[static_cast<std::size_t>(i)]) ++correct[kk];
    }
    for (std::size_t k = 0; k < out.bins.size(); ++k) {
        auto& b = out.bins[k];
        b.lo = static_cast<double>(k) / num_bins;
        b.hi = static_cast<double>(k + 1) / num_bins;
        if (b.count > 0) {
            b.confidence = conf_sum[k] / static_cast<double>(b.count);
            b.accuracy = static_cast<double>(correct[k]) / static_cast<double>(b.count);
        }
    }
    out.ece = ece_from_bins(out.bins);
    return out;
}

double mnll(const Eigen::MatrixXd& probs, std::span<const int> labels) {
    check_labels(probs, labels);
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        total -= std::log(std::max(probs(i, labels[static_cast<std::size_t>(i)]), kProbabilityFloor));
    }
    return total / static_cast<double>(probs.rows());
}

double error_rate(const Eigen::MatrixXd& probs, std::span<const int> labels) {
    check_labels(probs, labels);
    long wrong = 0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        if (argmax_row(probs, i) != labels[static_cast<std::size_t>(i)]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(probs.rows());
}

CalibrationReport calibration_report(const Eigen::MatrixXd& probs, std::span<const int> labels,
                                     int num_bins) {
    EceResult e = ece(probs, labels, num_bins);
    return {error_rate(probs, labels), mnll(probs, labels), e.ece, std::move(e.bins), num_bins};
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

PlattParams platt_fit(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw InputError("platt_fit: scores and labels differ in length");
    double n_pos = 0.0, n_neg = 0.0;
    for (int y : labels) {
        if (y == 1) {
            n_pos += 1.0;
        } else if (y == 0) {
            n_neg += 1.0;
        } else {
            throw InputError("platt_fit: labels must be 0 or 1");
        }
    }
    if (n_pos == 0.0 || n_neg == 0.0) throw InputError("platt_fit: need examples of both classes");
    const double t_hi = (n_pos + 1.0) / (n_pos + 2.0);
    const double t_lo = 1.0 / (n_neg + 2.0);
    const std::size_t n = scores.size();

    auto objective = [&](double a, double b) {
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = labels[i] == 1 ? t_hi : t_lo;
            const double z = a * scores[i] + b;
            f += log1p_exp(z) - t * z;
        }
        return f;
    };

    constexpr int kMaxIterations = 100;
    constexpr double kGradTol = 1e-8;
    constexpr double kRidge = 1e-12;
    PlattParams p{0.0, std::log(n_pos + 1.0) - std::log(n_neg + 1.0), 0};
    double f = objective(p.a, p.b);
    double gnorm = 0.0;
    for (p.iterations = 0; p.iterations < kMaxIterations; ++p.iterations) {
        double ga = 0.0, gb = 0.0, haa = kRidge, hab = 0.0, hbb = kRidge;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = labels[i] == 1 ? t_hi : t_lo;
            const double pi = sigmoid(p.a * scores[i] + p.b);
            const double r = pi - t;
            const double w = pi * (1.0 - pi);
            ga += r * scores[i];
            gb += r;
            haa += w * scores[i] * scores[i];
            hab += w * scores[i];
            hbb += w;
        }
        gnorm = std::hypot(ga, gb);
        if (gnorm < kGradTol) break;
        const double det = haa * hbb - hab * hab;
        const double da = -(hbb * ga - hab * gb) / det;
        const double db = -(-hab * ga + haa * gb) / det;
        const double slope = ga * da + gb * db;
        double step = 1.0;
        bool moved = false;
        for (; step >= 1e-10; step *= 0.5) {
            const double fa = objective(p.a + step * da, p.b + step * db);
            // Near the optimum the decrease falls below rounding; accept
            // steps that do not increase the objective beyond it.
            if (fa <= f + 1e-4 * step * slope || (step == 1.0 && fa <= f + 1e-12 * std::abs(f))) {
                p.a += step * da;
                p.b += step * db;
                f = fa;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    if (!(gnorm < kGradTol) && p.iterations >= kMaxIterations) {
        throw ModelError("platt_fit: no convergence after " + std::to_string(kMaxIterations) +
                         " Newton iterations (gradient norm " + std::to_string(gnorm) + ")");
    }
    if (!std::isfinite(p.a) || !std::isfinite(p.b)) throw ModelError("platt_fit: diverged");
    if (!(gnorm < 1e-5 * std::max(1.0, static_cast<double>(n)))) {
        throw ModelError("platt_fit: line search stalled with gradient norm " + std::to_string(gnorm));
    }
    return p;
}

Eigen::VectorXd platt_apply(const Eigen::Ref<const Eigen::VectorXd>& scores, double a, double b) {
    Eigen::VectorXd out(scores.size());
    for (Eigen::Index i = 0; i < scores.size(); ++i) out(i) = sigmoid(a * scores(i) + b);
    return out;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("normal_quantile: p must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

double band_z(double quantile) {
    if (!(quantile > 0.5 && quantile < 1.0)) throw InputError("quantile must lie in (0.5, 1)");
    return normal_quantile(0.5 * (1.0 + quantile));
}

ReliabilityBand reliability_band(const LatentPrediction& latent, const ProbabilityLink& link,
                                 std::span<const int> labels, double quantile, int num_bins) {
    ReliabilityBand band;
    band.z = band_z(quantile);
    const Eigen::MatrixXd probs = link(latent);
    EceResult mean = ece(probs, labels, num_bins);
    band.ece = mean.ece;
    band.mean = std::move(mean.bins);
    const auto n = static_cast<double>(probs.rows());
    for (const auto& b : band.mean) band.histogram.push_back(static_cast<double>(b.count) / n);

    if (probs.cols() != 2) {
        band.lower = band.mean;
        band.upper = band.mean;
        return band;
    }
    const Eigen::MatrixXd sd = latent.variances.array().sqrt();
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(latent.means.rows(), latent.means.cols());
    Eigen::MatrixXd shift = band.z * sd;
    if (shift.cols() == 2) shift.col(0) *= -1.0;  // class 0 moves against class 1
    const LatentPrediction lo{latent.means - shift, zero};
    const LatentPrediction hi{latent.means + shift, zero};
    band.lower = ece(link(lo), labels, num_bins).bins;
    band.upper = ece(link(hi), labels, num_bins).bins;
    return band;
}

}  // namespace gpd
