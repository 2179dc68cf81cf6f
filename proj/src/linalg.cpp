#include "gpd/linalg.hpp"

#include <cmath>
#include <sstream>

#include "gpd/errors.hpp"

namespace gpd {

double JitteredCholesky::log_determinant() const {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& A, double scale,
                                      std::string_view what) {
    JitteredCholesky out;
    for (double rel = kBaseJitter; rel <= kMaxJitter * 1.0000001; rel *= 10.0) {
        out.jitter = rel * scale;
        Eigen::MatrixXd B = A;
        B.diagonal().array() += out.jitter;
        out.llt.compute(B);
        if (out.llt.info() == Eigen::Success &&
            out.llt.matrixLLT().diagonal().allFinite() &&
            (out.llt.matrixLLT().diagonal().array() > 0.0).all()) {
            return out;
        }
    }
    std::ostringstream msg;
    msg << what << ": Cholesky failed after jitter escalation to " << kMaxJitter * scale
        << " (n=" << A.rows();
    if (A.rows() > 0) {
        msg << ", diagonal range [" << A.diagonal().minCoeff() << ", " << A.diagonal().maxCoeff()
            << "]";
    }
    msg << ")";
    throw NumericalError(msg.str());
}

namespace {

constexpr Eigen::Index kBlock = 64;

// In-place inverse of the lower triangle of T (strict upper part ignored).
// Recursive 2x2 blocking keeps the cost at n^3/3 by never touching the
// structural zeros.
void invert_lower(Eigen::Ref<Eigen::MatrixXd> T) {
    const Eigen::Index n = T.rows();
    if (n <= kBlock) {
        Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        T.triangularView<Eigen::Lower>().solveInPlace(I);
        T.triangularView<Eigen::Lower>() = I;
        return;
    }
    const Eigen::Index h = n / 2;
    const Eigen::Index r = n - h;
    invert_lower(T.topLeftCorner(h, h));
    invert_lower(T.bottomRightCorner(r, r));
    // C = -D^-1 L21 A^-1 with both inverses already in place.
    Eigen::MatrixXd C = T.bottomLeftCorner(r, h) * T.topLeftCorner(h, h).triangularView<Eigen::Lower>();
    T.bottomLeftCorner(r, h).noalias() = -(T.bottomRightCorner(r, r).triangularView<Eigen::Lower>() * C);
}

// Lower triangle of M^T M for lower-triangular M, in place.
void lower_gram(Eigen::Ref<Eigen::MatrixXd> M) {
    const Eigen::Index n = M.rows();
    if (n <= kBlock) {
        const Eigen::MatrixXd L = M.triangularView<Eigen::Lower>();
        M.triangularView<Eigen::Lower>() = L.transpose() * L;
        return;
    }
    const Eigen::Index h = n / 2;
    const Eigen::Index r = n - h;
    // [A 0; C D]^T [A 0; C D] = [A^T A + C^T C, C^T D; D^T C, D^T D].
    const Eigen::MatrixXd C = M.bottomLeftCorner(r, h);
    lower_gram(M.topLeftCorner(h, h));
    M.topLeftCorner(h, h).selfadjointView<Eigen::Lower>().rankUpdate(C.transpose());
    M.bottomLeftCorner(r, h) = M.bottomRightCorner(r, r).triangularView<Eigen::Lower>().transpose() * C;
    lower_gram(M.bottomRightCorner(r, r));
}

}  // namespace

Eigen::MatrixXd cholesky_inverse(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    Eigen::MatrixXd M = llt.matrixLLT();
    invert_lower(M);
    lower_gram(M);
    return M.selfadjointView<Eigen::Lower>();
}

}  // namespace gpd
