#include <gtest/gtest.h>

#include "frechetnet/network.hpp"

using namespace frechetnet;

namespace {

DenseMatrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    DenseMatrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.standard_normal();
    return m;
}

}  // namespace

TEST(Architecture, Validation) {
    EXPECT_THROW(Architecture::uniform(3, 0, 4, 2, 0.0), ParameterError);
    EXPECT_THROW(Architecture::uniform(0, 2, 4, 2, 0.0), ParameterError);
    EXPECT_THROW(Architecture::uniform(3, 2, 0, 2, 0.0), ParameterError);
    EXPECT_THROW(Architecture::uniform(3, 2, 4, 2, 1.0), ParameterError);
    const auto a = Architecture::uniform(10, 4, 2048, 8, 0.3);
    EXPECT_EQ(a.hidden_widths, (std::vector<Eigen::Index>{2048, 2048, 2048, 8}));
    EXPECT_EQ(a.output_dim(), 8);
}

TEST(InitParams, RangesFollowFanIn) {
    Rng rng(1);
    const auto a = Architecture::uniform(2, 1, 3, 3, 0.0);
    const auto p = init_params(a, rng);
    EXPECT_LE(p.layers[0].weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(2.0));
    EXPECT_EQ(p.layers[0].weight.rows(), 3);
    EXPECT_EQ(p.layers[0].weight.cols(), 2);

    Architecture b{3, {4, 4}, 0.0};
    const auto q = init_params(b, rng);
    EXPECT_LE(q.layers[1].bias.cwiseAbs().maxCoeff(), 0.5);
    EXPECT_LE(q.layers[1].weight.cwiseAbs().maxCoeff(), 0.5);
    EXPECT_LE(q.layers[0].weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(3.0));
}

TEST(InitParams, Deterministic) {
    const auto a = Architecture::uniform(5, 3, 7, 2, 0.1);
    Rng r1(99), r2(99);
    EXPECT_TRUE(init_params(a, r1).flatten() == init_params(a, r2).flatten());
}

TEST(Forward, ReluClamp) {
    Architecture a{2, {2}, 0.0};
    NetworkParams p{{LayerParams{DenseMatrix::Identity(2, 2), DenseVector::Zero(2)}}};
    DenseMatrix x(1, 2);
    x << 1, -1;
    Rng rng(0);
    const auto out = forward(p, a, x, ForwardMode::eval, rng).output;
    EXPECT_EQ(out(0, 0), 1.0);
    EXPECT_EQ(out(0, 1), 0.0);
}

TEST(Forward, ZeroParamsGiveZero) {
    const auto a = Architecture::uniform(3, 3, 5, 2, 0.2);
    Rng rng(2);
    auto p = init_params(a, rng).zeros_like();
    EXPECT_EQ(represent(p, a, random_matrix(4, 3, rng)), DenseMatrix::Zero(4, 2));
}

TEST(Forward, DimensionMismatch) {
    const auto a = Architecture::uniform(3, 2, 5, 2, 0.0);
    Rng rng(2);
    const auto p = init_params(a, rng);
    EXPECT_THROW(represent(p, a, DenseMatrix::Ones(2, 4)), DimensionError);
}

TEST(Forward, DropoutOffTrainEqualsEval) {
    const auto a = Architecture::uniform(4, 3, 6, 3, 0.0);
    Rng rng(3);
    const auto p = init_params(a, rng);
    const auto x = random_matrix(7, 4, rng);
    Rng m(5);
    EXPECT_TRUE(forward(p, a, x, ForwardMode::train, m).output == represent(p, a, x));
}

TEST(Forward, LastLayerNeverDropped) {
    const auto a = Architecture::uniform(4, 3, 6, 3, 0.5);
    Rng rng(3);
    const auto p = init_params(a, rng);
    Rng m(5);
    const auto fwd = forward(p, a, random_matrix(7, 4, rng), ForwardMode::train, m);
    ASSERT_EQ(fwd.cache.masks.size(), 3u);
    EXPECT_EQ(fwd.cache.masks[2].size(), 0);
    EXPECT_GT(fwd.cache.masks[0].size(), 0);
    // surviving units are scaled by 1/(1-r)
    for (Eigen::Index i = 0; i < fwd.cache.masks[0].size(); ++i) {
        const double v = fwd.cache.masks[0].data()[i];
        ASSERT_TRUE(v == 0.0 || v == 2.0);
    }
}

TEST(Forward, PositiveHomogeneityPerLayer) {
    Architecture a{3, {5}, 0.0};
    Rng rng(4);
    auto p = init_params(a, rng);
    const auto x = random_matrix(6, 3, rng);
    const DenseMatrix base = represent(p, a, x);
    p.layers[0].weight *= 2.5;
    p.layers[0].bias *= 2.5;
    EXPECT_LT((represent(p, a, x) - 2.5 * base).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, BatchEqualsStackedSingles) {
    const auto a = Architecture::uniform(4, 3, 6, 3, 0.3);
    Rng rng(6);
    const auto p = init_params(a, rng);
    const auto x = random_matrix(9, 4, rng);
    const DenseMatrix batch = represent(p, a, x);
    for (Eigen::Index i = 0; i < 9; ++i) {
        const DenseMatrix one = represent(p, a, x.row(i));
        EXPECT_LT((one.row(0) - batch.row(i)).cwiseAbs().maxCoeff(), 1e-13);
    }
}

TEST(Forward, InvertedDropoutIsUnbiased) {
    Architecture a{3, {8, 4}, 0.3};
    Rng rng(7);
    const auto p = init_params(a, rng);
    DenseMatrix x = random_matrix(1, 3, rng);
    // the first layer's post-dropout output is what the mask touches
    const int draws = 20000;
    DenseVector sum = DenseVector::Zero(8), sum2 = DenseVector::Zero(8);
    Rng masks(8);
    for (int k = 0; k < draws; ++k) {
        const auto fwd = forward(p, a, x, ForwardMode::train, masks);
        const DenseVector h = fwd.cache.post[0].row(0).transpose();
        sum += h;
        sum2 += h.cwiseProduct(h);
    }
    const DenseVector clean = (p.layers[0].weight * x.row(0).transpose() + p.layers[0].bias).cwiseMax(0.0);
    for (Eigen::Index j = 0; j < 8; ++j) {
        const double mean = sum(j) / draws;
        const double se = std::sqrt(std::max(sum2(j) / draws - mean * mean, 0.0) / draws);
        EXPECT_LE(std::abs(mean - clean(j)), 3.0 * se + 1e-15) << j;
    }
}

TEST(NetworkParams, FlattenRoundTrip) {
    const auto a = Architecture::uniform(3, 3, 4, 2, 0.0);
    Rng rng(9);
    auto p = init_params(a, rng);
    const DenseVector flat = p.flatten();
    EXPECT_EQ(flat.size(), p.parameter_count());
    auto q = p.zeros_like();
    q.assign_flat(flat);
    EXPECT_TRUE(q.layers == p.layers);
}
