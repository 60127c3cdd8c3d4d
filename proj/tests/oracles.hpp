#ifndef FRECHETNET_TESTS_ORACLES_HPP
#define FRECHETNET_TESTS_ORACLES_HPP

// Independent reference computations used as test oracles. None of these
// call into the code under test except for plain point constructors.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Every split of {0..m-1} into contiguous blocks, as lists of block lengths.
inline std::vector<std::vector<int>> contiguous_partitions(int m) {
    std::vector<std::vector<int>> out;
    for (unsigned mask = 0; mask < (1u << (m - 1)); ++mask) {
        std::vector<int> lens;
        int len = 1;
        for (int j = 0; j < m - 1; ++j) {
            if (mask & (1u << j)) {
                lens.push_back(len);
                len = 1;
            } else {
                ++len;
            }
        }
        lens.push_back(len);
        out.push_back(lens);
    }
    return out;
}

inline Mat block_basis(const std::vector<int>& lens, int m) {
    Mat b = Mat::Zero(m, static_cast<int>(lens.size()));
    int pos = 0;
    for (std::size_t k = 0; k < lens.size(); ++k) {
        for (int j = 0; j < lens[k]; ++j) b(pos + j, static_cast<int>(k)) = 1.0;
        pos += lens[k];
    }
    return b;
}

/// Minimizer of f over nondecreasing vectors of length m, where f is a
/// strictly convex quadratic given through its Hessian H and linear term g:
/// f(w) = 0.5 w^T H w - g^T w. Enumerates every face of the monotone cone
/// (blocks of tied coordinates), minimizes on the face and keeps the best
/// feasible candidate, judged by `objective`.
template <class Objective>
Vec monotone_qp(const Mat& h, const Vec& g, Objective objective) {
    const int m = static_cast<int>(g.size());
    Vec best;
    double best_val = std::numeric_limits<double>::infinity();
    for (const auto& lens : contiguous_partitions(m)) {
        const Mat b = block_basis(lens, m);
        const Vec c = (b.transpose() * h * b).ldlt().solve(b.transpose() * g);
        const Vec w = b * c;
        bool feasible = true;
        for (int j = 1; j < m; ++j) feasible = feasible && w(j) >= w(j - 1) - 1e-12;
        if (!feasible) continue;
        const double v = objective(w);
        if (v < best_val) {
            best_val = v;
            best = w;
        }
    }
    return best;
}

/// L2 projection onto the monotone cone by face enumeration.
inline Vec isotonic(const Vec& v) {
    const int m = static_cast<int>(v.size());
    return monotone_qp(Mat::Identity(m, m), v, [&](const Vec& w) { return (w - v).squaredNorm(); });
}

/// argmin over nondecreasing w of sum_i weights_i (1/m) |y_i - w|^2 for
/// quantile vectors y_i (columns of `ys`), assuming sum(weights) > 0.
inline Vec wasserstein_weighted_mean(const Mat& ys, const Vec& weights) {
    const int m = static_cast<int>(ys.rows());
    const double sw = weights.sum();
    const Mat h = (2.0 * sw / m) * Mat::Identity(m, m);
    const Vec g = (2.0 / m) * (ys * weights);
    auto obj = [&](const Vec& w) {
        double acc = 0.0;
        for (int i = 0; i < ys.cols(); ++i) acc += weights(i) * (ys.col(i) - w).squaredNorm() / m;
        return acc;
    };
    return monotone_qp(h, g, obj);
}

/// Fitted values at `query` rows of least squares of y on (1, features),
/// via the normal equations.
inline Mat ols_fitted(const Mat& features, const Mat& y, const Mat& query) {
    const auto n = features.rows();
    Mat design(n, features.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(features.cols()) = features;
    const Mat beta = (design.transpose() * design).ldlt().solve(design.transpose() * y);
    Mat q(query.rows(), features.cols() + 1);
    q.col(0).setOnes();
    q.rightCols(features.cols()) = query;
    return q * beta;
}

/// Two-pass mean and 1/n covariance with explicit loops.
inline void mean_cov(const Mat& rows, Vec& mean, Mat& cov) {
    const auto n = rows.rows(), p = rows.cols();
    mean = Vec::Zero(p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) mean(j) += rows(i, j);
    mean /= static_cast<double>(n);
    cov = Mat::Zero(p, p);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < p; ++a)
            for (int b = 0; b < p; ++b) cov(a, b) += (rows(i, a) - mean(a)) * (rows(i, b) - mean(b));
    cov /= static_cast<double>(n);
}

}  // namespace oracle

#endif
