#include "gpd/dirichlet.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gpd/errors.hpp"

namespace gpd {

AlphaEpsilon::AlphaEpsilon(double value) : value_(value) {
    if (!(value > 0.0 && value < 1.0)) {
        throw InputError("alpha_eps must lie in (0, 1), got " + std::to_string(value));
    }
}

LogNormalMatch lognormal_match(double alpha) {
    // log1p keeps precision when alpha is large; for tiny alpha 1/alpha dominates.
    const double s2 = std::log1p(1.0 / alpha);
    return {std::log(alpha) - 0.5 * s2, s2};
}

Eigen::MatrixXd one_hot(std::span<const int> labels, int num_classes) {
    if (num_classes < 1) throw InputError("one_hot: num_classes must be positive");
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int c = labels[i];
        if (c < 0 || c >= num_classes) {
            throw InputError("one_hot: label " + std::to_string(c) + " at index " +
                             std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
        }
        Y(static_cast<Eigen::Index>(i), c) = 1.0;
    }
    return Y;
}

TransformedTargets transform(const Eigen::MatrixXd& one_hot, AlphaEpsilon alpha_eps) {
    const Eigen::Index n = one_hot.rows();
    const Eigen::Index C = one_hot.cols();
    if (C < 2) throw InputError("transform: need at least two classes");
    for (Eigen::Index i = 0; i < n; ++i) {
        int ones = 0;
        for (Eigen::Index c = 0; c < C; ++c) {
            const double v = one_hot(i, c);
            if (v == 1.0) {
                ++ones;
            } else if (v != 0.0) {
                ones = -1;
                break;
            }
        }
        if (ones != 1) throw InputError("transform: row " + std::to_string(i) + " is not one-hot");
    }

    const LogNormalMatch observed = lognormal_match(1.0 + alpha_eps.value());
    const LogNormalMatch unobserved = lognormal_match(alpha_eps.value());

    TransformedTargets out{Eigen::MatrixXd(n, C), Eigen::MatrixXd(n, C), alpha_eps,
                           static_cast<int>(C)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < C; ++c) {
            const LogNormalMatch& m = one_hot(i, c) == 1.0 ? observed : unobserved;
            out.y_tilde(i, c) = m.y_tilde;
            out.sigma2_tilde(i, c) = m.sigma2_tilde;
        }
    }
    return out;
}

std::vector<AlphaEpsilon> default_alpha_grid() {
    return {AlphaEpsilon{0.1}, AlphaEpsilon{0.01}, AlphaEpsilon{0.001}};
}

AlphaSelection select_alpha_eps(std::span<const AlphaEpsilon> grid,
                                const AlphaScoreFn& fit_and_score) {
    if (grid.empty()) throw InputError("select_alpha_eps: empty grid");
    AlphaSelection sel;
    sel.scores.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    std::string failures;
    // Grid points are scored in order; each call derives its own RNG stream
    // from the grid index so the outcome does not depend on evaluation order.
    for (std::size_t g = 0; g < grid.size(); ++g) {
        try {
            const double s = fit_and_score(grid[g], g);
            if (std::isfinite(s)) sel.scores[g] = s;
        } catch (const std::exception& e) {
            failures += "\n  alpha_eps=" + std::to_string(grid[g].value()) + ": " + e.what();
        }
    }
    int best = -1;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (std::isnan(sel.scores[g])) continue;
        if (best < 0) {
            best = static_cast<int>(g);
            continue;
        }
        const auto b = static_cast<std::size_t>(best);
        if (sel.scores[g] < sel.scores[b] ||
            (sel.scores[g] == sel.scores[b] && grid[g].value() > grid[b].value())) {
            best = static_cast<int>(g);
        }
    }
    if (best < 0) throw ModelError("select_alpha_eps: every grid point failed" + failures);
    sel.best = grid[static_cast<std::size_t>(best)];
    return sel;
}

}  // namespace gpd
