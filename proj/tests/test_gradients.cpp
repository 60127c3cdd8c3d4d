#include <gtest/gtest.h>

#include <numeric>

#include "frechetnet/gradients.hpp"

using namespace frechetnet;

namespace {

DenseMatrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    DenseMatrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.standard_normal();
    return m;
}

}  // namespace

class GradientCheck : public ::testing::TestWithParam<MetricSpace> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
    Rng rng(101);
    const auto report = check_gradients(GetParam(), 25, rng);
    EXPECT_EQ(report.trials, 25);
    EXPECT_GT(report.coordinates_checked, 0);
    EXPECT_LE(report.max_relative_error, 1e-4) << to_string(GetParam().kind());
}

INSTANTIATE_TEST_SUITE_P(Spaces, GradientCheck,
                         ::testing::Values(MetricSpace::euclidean(3), MetricSpace::wasserstein(6),
                                           MetricSpace::laplacian(4), MetricSpace::aitchison(4)),
                         [](const auto& info) { return std::string(to_string(info.param.kind())); });

TEST(LossAndGrad, ConstantResponsesGiveZeroRiskAndGradient) {
    Rng rng(1);
    const auto a = Architecture::uniform(3, 2, 6, 3, 0.0);
    const auto params = init_params(a, rng);
    const auto s = MetricSpace::wasserstein(5);
    DenseVector q(5);
    q << -1, 0, 0, 2, 3;
    std::vector<Point> ys(10, QuantileFunction(q));
    Rng m(0);
    const auto [report, grads] =
        loss_and_grad(random_matrix(10, 3, rng), ys, params, a, s, ForwardMode::eval, m);
    EXPECT_LT(report.risk, 1e-24);
    EXPECT_LT(grads.flatten().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LossAndGrad, PermutationInvariant) {
    Rng rng(2);
    const auto a = Architecture::uniform(3, 2, 6, 3, 0.0);
    const auto params = init_params(a, rng);
    const auto s = MetricSpace::euclidean(2);
    const auto x = random_matrix(12, 3, rng);
    const auto y = random_matrix(12, 2, rng);
    std::vector<Eigen::Index> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::swap(perm[0], perm[5]);
    DenseMatrix xp(12, 3), yp(12, 2);
    for (Eigen::Index i = 0; i < 12; ++i) {
        xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
        yp.row(i) = y.row(perm[static_cast<std::size_t>(i)]);
    }
    Rng m1(0), m2(0);
    const auto r1 = loss_and_grad(x, y, params, a, s, ForwardMode::eval, m1);
    const auto r2 = loss_and_grad(xp, yp, params, a, s, ForwardMode::eval, m2);
    EXPECT_NEAR(r1.first.risk, r2.first.risk, 1e-12);
    EXPECT_LT((r1.second.flatten() - r2.second.flatten()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(LossAndGrad, Contracts) {
    Rng rng(3);
    const auto a = Architecture::uniform(3, 2, 6, 3, 0.0);
    const auto params = init_params(a, rng);
    const auto s = MetricSpace::euclidean(2);
    Rng m(0);
    EXPECT_THROW(loss_and_grad(random_matrix(1, 3, rng), random_matrix(1, 2, rng), params, a, s,
                               ForwardMode::eval, m),
                 SampleSizeError);
    EXPECT_THROW(loss_and_grad(random_matrix(4, 3, rng), random_matrix(4, 3, rng), params, a, s,
                               ForwardMode::eval, m),
                 DimensionError);
}

TEST(LossAndGrad, PerExampleLossUsesSpaceDistance) {
    Rng rng(4);
    const auto a = Architecture::uniform(2, 2, 5, 2, 0.0);
    const auto params = init_params(a, rng);
    for (const auto& s : {MetricSpace::wasserstein(7), MetricSpace::laplacian(3), MetricSpace::aitchison(3)}) {
        const auto x = random_matrix(9, 2, rng);
        std::vector<Point> ys;
        DenseVector shift = DenseVector::Ones(3);
        for (int i = 0; i < 9; ++i) ys.push_back(detail::random_point(s, rng, shift));
        Rng m(0);
        const auto [report, grads] = loss_and_grad(x, ys, params, a, s, ForwardMode::eval, m);
        FittedHead head(s, represent(params, a, x), ys);
        const auto preds = head.predict_features(represent(params, a, x));
        double acc = 0.0;
        for (int i = 0; i < 9; ++i) {
            const double d2 = s.squared_distance(preds[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(i)]);
            EXPECT_NEAR(report.per_example(i), d2, 1e-9 * (1.0 + d2)) << to_string(s.kind());
            acc += d2;
        }
        EXPECT_NEAR(report.risk, acc / 9.0, 1e-9 * (1.0 + acc));
        EXPECT_TRUE(grads.all_finite());
    }
}

// Detached statistics: the mean and inverse covariance are frozen at their
// current values, so the risk as a function of the representations F is
//   R(F) = (1/n) sum_j |ebar + (1/n) (f_j - mu0) K0 (F - mu0)^T E - e_j|^2
// in the Euclidean case. Differentiate that directly.
TEST(HeadBackward, DetachedMatchesFrozenStatisticsDifferences) {
    Rng rng(5);
    const Eigen::Index n = 10, p = 3, d = 2;
    const auto reps = random_matrix(n, p, rng);
    const auto e = random_matrix(n, d, rng);
    const auto s = MetricSpace::euclidean(d);
    const DenseVector mu0 = reps.colwise().mean().transpose();
    const DenseMatrix c0 = reps.rowwise() - mu0.transpose();
    const DenseMatrix k0 = ((c0.transpose() * c0) / static_cast<double>(n)).inverse();
    const DenseVector ebar = e.colwise().mean().transpose();
    auto frozen_risk = [&](const DenseVector& flat) {
        const DenseMatrix f = Eigen::Map<const DenseMatrix>(flat.data(), n, p);
        const DenseMatrix c = f.rowwise() - mu0.transpose();
        DenseMatrix raw = (c * k0 * c.transpose() * e) / static_cast<double>(n);
        raw.rowwise() += ebar.transpose();
        return (raw - e).squaredNorm() / static_cast<double>(n);
    };
    const DenseVector flat = Eigen::Map<const DenseVector>(reps.data(), reps.size());
    const DenseVector fd = finite_diff_gradient(frozen_risk, flat, 1e-6);

    GradientOptions opts;
    opts.stats = StatsMode::detached;
    const auto hf = detail::head_forward(reps, e, s, RidgePolicy::fixed(0.0));
    const DenseMatrix g = detail::head_backward(hf, e, s, opts);
    const DenseVector gflat = Eigen::Map<const DenseVector>(g.data(), g.size());
    EXPECT_LT((gflat - fd).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + fd.cwiseAbs().maxCoeff()));
    EXPECT_NEAR(hf.report.risk, frozen_risk(flat), 1e-12);
}

TEST(HeadBackward, DifferentiatedMatchesTrueRiskDifferences) {
    Rng rng(6);
    const Eigen::Index n = 9, p = 2, d = 3;
    const auto reps = random_matrix(n, p, rng);
    const auto e = random_matrix(n, d, rng);
    const auto s = MetricSpace::euclidean(d);
    auto risk = [&](const DenseVector& flat) {
        const DenseMatrix f = Eigen::Map<const DenseMatrix>(flat.data(), n, p);
        return detail::head_forward(f, e, s, RidgePolicy::fixed(0.0)).report.risk;
    };
    const DenseVector flat = Eigen::Map<const DenseVector>(reps.data(), reps.size());
    const DenseVector fd = finite_diff_gradient(risk, flat, 1e-6);
    const auto hf = detail::head_forward(reps, e, s, RidgePolicy::fixed(0.0));
    const DenseMatrix g = detail::head_backward(hf, e, s, GradientOptions{});
    const DenseVector gflat = Eigen::Map<const DenseVector>(g.data(), g.size());
    EXPECT_LT((gflat - fd).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + fd.cwiseAbs().maxCoeff()));
    // translating every representation leaves the risk unchanged
    for (Eigen::Index j = 0; j < p; ++j) EXPECT_NEAR(g.col(j).sum(), 0.0, 1e-10);
}

TEST(LossAndGrad, WassersteinScaleIsOneOverGrid) {
    // two fixed quantile vectors one unit apart everywhere are at squared
    // distance 1 regardless of grid size
    for (Eigen::Index m : {3, 10, 100}) {
        const auto s = MetricSpace::wasserstein(m);
        DenseVector a = DenseVector::LinSpaced(m, 0.0, 1.0);
        DenseVector b = a.array() + 1.0;
        EXPECT_NEAR(s.squared_distance(QuantileFunction(a), QuantileFunction(b)), 1.0, 1e-12);
        EXPECT_NEAR(s.squared_distance_scale(), 1.0 / static_cast<double>(m), 1e-15);
    }
}
