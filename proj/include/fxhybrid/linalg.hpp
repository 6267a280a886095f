#pragma once

#include <Eigen/Dense>

namespace fxh {

/// Result of a rank-revealing least-squares solve.
template <class Solution>
struct LstsqResult {
    Solution coef;
    Eigen::Index rank = 0;
    bool rank_deficient = false;
};

/// Minimum-norm least squares via complete orthogonal decomposition.
/// Pivots whose magnitude falls below `threshold` times the largest are
/// treated as zero.
template <class Rhs>
auto lstsq(const Eigen::MatrixXd& a, const Rhs& b, double threshold = 1e-10) {
    using Plain = typename Rhs::PlainObject;
    LstsqResult<Plain> out;
    if (a.cols() == 0) {
        out.coef = Plain::Zero(0, b.cols());
        return out;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(threshold);
    cod.compute(a);
    out.rank = cod.rank();
    out.rank_deficient = out.rank < a.cols();
    out.coef = cod.solve(b);
    return out;
}

}  // namespace fxh
