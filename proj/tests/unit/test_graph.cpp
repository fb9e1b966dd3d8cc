#include <gtest/gtest.h>

#include <cmath>
#include <ostream>

#include "molf/errors.hpp"
#include "molf/harness/oracles.hpp"
#include "molf/numerics/finite_diff.hpp"
#include "molf/numerics/graph.hpp"

using namespace molf;

namespace molf {
void PrintTo(GradOp op, std::ostream* os) { *os << to_string(op); }
} // namespace molf

TEST(Graph, HalfSquaredNormGradient) {
    // 1/2 ||x||^2 written as (n/2) * mse(x, 0).
    Graph g;
    const NodeId x = g.leaf(Matrix{{1.0}, {-2.0}});
    const NodeId zero = g.leaf(Matrix(2, 1));
    const NodeId loss = g.scale(g.mse(x, zero), 1.0);
    const auto grads = g.backward(loss, std::vector<NodeId>{x});
    EXPECT_DOUBLE_EQ(grads[0][0], 1.0);
    EXPECT_DOUBLE_EQ(grads[0][1], -2.0);
}

TEST(Graph, MseOfLinearMap) {
    Graph g;
    const NodeId w = g.leaf(Matrix{{1.0}});
    const NodeId x = g.leaf(Matrix{{2.0}});
    const NodeId y = g.leaf(Matrix{{0.0}});
    const NodeId loss = g.mse(g.matmul(w, x), y);
    EXPECT_EQ(g.value(loss)[0], 4.0);
    const auto grads = g.backward(loss, std::vector<NodeId>{w});
    EXPECT_EQ(grads[0](0, 0), 8.0);
}

TEST(Graph, SoftmaxCrossEntropyValue) {
    Graph g;
    // Uniform logits over 4 classes: loss = log 4 per column.
    const NodeId logits = g.leaf(Matrix(4, 3, 0.7));
    const NodeId loss = g.softmax_cross_entropy(logits, {0, 1, 3});
    EXPECT_NEAR(g.value(loss)[0], std::log(4.0), 1e-15);
}

TEST(Graph, SoftmaxCrossEntropyIsStableForLargeLogits) {
    Graph g;
    const NodeId logits = g.leaf(Matrix{{1000.0}, {0.0}});
    const NodeId loss = g.softmax_cross_entropy(logits, {1});
    EXPECT_NEAR(g.value(loss)[0], 1000.0, 1e-9);
}

TEST(Graph, ReluForwardAndDropoutScaling) {
    Graph g;
    const NodeId x = g.leaf(Matrix{{-1.0, 2.0}});
    EXPECT_TRUE(g.value(g.relu(x)).bitwise_equal(Matrix{{0.0, 2.0}}));
    const NodeId d = g.dropout_with_mask(x, Matrix{{0.0, 2.0}});
    EXPECT_TRUE(g.value(d).bitwise_equal(Matrix{{-0.0, 4.0}}) ||
                g.value(d).bitwise_equal(Matrix{{0.0, 4.0}}));
}

TEST(Graph, DropoutKeepsExpectationAndRecordsMask) {
    Graph g;
    Rng rng(3);
    const NodeId x = g.leaf(Matrix(200, 200, 1.0));
    const NodeId d = g.dropout(x, 0.25, rng);
    const Matrix& y = g.value(d);
    double kept = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ASSERT_TRUE(y[i] == 0.0 || std::abs(y[i] - 1.0 / 0.75) < 1e-15);
        kept += y[i] != 0.0;
    }
    EXPECT_NEAR(kept / y.size(), 0.75, 0.01);
    // Backward reuses the recorded mask.
    const NodeId loss = g.mse(d, g.leaf(Matrix(200, 200)));
    const auto grad = g.backward(loss, std::vector<NodeId>{x})[0];
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_EQ(grad[i] == 0.0, y[i] == 0.0);
}

TEST(Graph, DropoutRateZeroIsIdentity) {
    Graph g;
    Rng rng(1);
    const Matrix v{{1.0, -3.0}};
    const NodeId x = g.leaf(v);
    EXPECT_TRUE(g.value(g.dropout(x, 0.0, rng)).bitwise_equal(v));
}

TEST(Graph, NonScalarLossRejected) {
    Graph g;
    const NodeId x = g.leaf(Matrix(2, 2, 1.0));
    EXPECT_THROW(g.backward(x, std::vector<NodeId>{x}), ContractError);
}

TEST(Graph, NonLeafRequestRejected) {
    Graph g;
    const NodeId x = g.leaf(Matrix(1, 1, 1.0));
    const NodeId y = g.scale(x, 2.0);
    const NodeId loss = g.mse(y, g.leaf(Matrix(1, 1)));
    EXPECT_THROW(g.backward(loss, std::vector<NodeId>{y}), ContractError);
}

TEST(Graph, UnreachableLeafGetsZeroGradient) {
    Graph g;
    const NodeId x = g.leaf(Matrix(1, 1, 1.0));
    const NodeId unused = g.leaf(Matrix(2, 3, 5.0));
    const NodeId loss = g.mse(x, g.leaf(Matrix(1, 1)));
    const auto grads = g.backward(loss, std::vector<NodeId>{unused, x});
    EXPECT_TRUE(grads[0].bitwise_equal(Matrix(2, 3)));
    EXPECT_EQ(grads[1][0], 2.0);
}

TEST(Graph, SharedNodeAccumulatesGradient) {
    Graph g;
    const NodeId x = g.leaf(Matrix{{3.0}});
    const NodeId twice = g.add(x, x);
    const NodeId loss = g.mse(twice, g.leaf(Matrix(1, 1)));
    // d/dx (2x)^2 = 8x
    EXPECT_EQ(g.backward(loss, std::vector<NodeId>{x})[0][0], 24.0);
}

TEST(Graph, ShapeErrors) {
    Graph g;
    const NodeId a = g.leaf(Matrix(2, 3));
    const NodeId b = g.leaf(Matrix(2, 3));
    EXPECT_THROW(g.matmul(a, b), DimensionError);
    EXPECT_THROW(g.softmax_cross_entropy(a, {0, 1}), DimensionError);
    EXPECT_THROW(g.softmax_cross_entropy(a, {0, 1, 7}), ContractError);
}

TEST(FiniteDiff, SumHasUnitGradient) {
    Rng rng(8);
    const Matrix x = rng.gaussian_matrix(3, 4);
    const Matrix grad = finite_diff_grad([](const Matrix& m) { return sum(m); }, x);
    for (std::size_t i = 0; i < grad.size(); ++i) EXPECT_NEAR(grad[i], 1.0, 1e-9);
}

TEST(FiniteDiff, SquareAtThree) {
    const Matrix grad = finite_diff_grad([](const Matrix& m) { return m[0] * m[0]; }, Matrix{{3.0}}, 1e-5);
    EXPECT_NEAR(grad[0], 6.0, 1e-8);
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
    const auto f = [](const Matrix& m) { return sum(m); };
    EXPECT_THROW(finite_diff_grad(f, Matrix(1, 1), 0.0), ContractError);
    EXPECT_THROW(finite_diff_grad(f, Matrix(1, 1), -1e-5), ContractError);
}

TEST(FiniteDiff, NonFiniteEvaluationIsNumericError) {
    const auto f = [](const Matrix& m) { return std::log(m[0]); };
    EXPECT_THROW(finite_diff_grad(f, Matrix{{0.0}}), NumericError);
}

class OpGradient : public ::testing::TestWithParam<GradOp> {};

TEST_P(OpGradient, MatchesFiniteDifferencesAcrossSeeds) {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        ASSERT_LE(op_gradient_error(GetParam(), seed), 1e-4) << "seed " << seed;
    }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::ValuesIn(all_grad_ops().begin(), all_grad_ops().end()),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(MlpGradient, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) ASSERT_LE(mlp_gradient_error(seed), 1e-4);
}
