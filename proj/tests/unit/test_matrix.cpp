#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "molf/errors.hpp"
#include "molf/numerics/matrix.hpp"
#include "molf/numerics/rng.hpp"

using namespace molf;

TEST(Matrix, IdentityTimesMatrixIsUnchanged) {
    const Matrix m{{1.5, -2.0, 3.0}, {0.25, 4.0, -1.0}};
    EXPECT_TRUE(matmul(Matrix::identity(2), m).bitwise_equal(m));
}

TEST(Matrix, HandMultiplication) {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix b{{5}, {6}};
    const Matrix c = matmul(a, b);
    ASSERT_EQ(c.rows(), 2u);
    ASSERT_EQ(c.cols(), 1u);
    EXPECT_EQ(c(0, 0), 17.0);
    EXPECT_EQ(c(1, 0), 39.0);
}

TEST(Matrix, ShapeMismatchNamesBothShapes) {
    const Matrix a(2, 3), b(4, 5);
    try {
        (void)matmul(a, b);
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("2 x 3"), std::string::npos) << what;
        EXPECT_NE(what.find("4 x 5"), std::string::npos) << what;
    }
    EXPECT_THROW(add(a, b), DimensionError);
    EXPECT_THROW(subtract(a, b), DimensionError);
    EXPECT_THROW(hadamard(a, b), DimensionError);
    EXPECT_THROW(add_bias(a, Matrix(3, 1)), DimensionError);
}

TEST(Matrix, RaggedInitializerRejected) {
    EXPECT_THROW((Matrix{{1, 2}, {3}}), DimensionError);
}

TEST(Matrix, SummationOrderIsLeftToRight) {
    // 1e16 + 1 - 1e16 is 0 left to right but 1 with any other grouping.
    const Matrix a{{1e16, 1.0, -1e16}};
    const Matrix b{{1.0}, {1.0}, {1.0}};
    EXPECT_EQ(matmul(a, b)(0, 0), 0.0);
}

TEST(Matrix, TransposeAndBias) {
    const Matrix a{{1, 2, 3}, {4, 5, 6}};
    const Matrix t = transpose(a);
    EXPECT_EQ(t.rows(), 3u);
    EXPECT_EQ(t(2, 1), 6.0);
    const Matrix biased = add_bias(a, Matrix{{10}, {20}});
    EXPECT_EQ(biased(0, 2), 13.0);
    EXPECT_EQ(biased(1, 0), 24.0);
}

TEST(Matrix, Reductions) {
    const Matrix a{{3, -4}};
    EXPECT_EQ(sum(a), -1.0);
    EXPECT_EQ(frobenius_norm_sq(a), 25.0);
    EXPECT_EQ(frobenius_norm(a), 5.0);
    EXPECT_EQ(max_abs(a), 4.0);
}

TEST(Matrix, BitwiseEqualSeesSignedZero) {
    EXPECT_FALSE(Matrix({{0.0}}).bitwise_equal(Matrix({{-0.0}})));
    EXPECT_TRUE(Matrix({{1.0}}).bitwise_equal(Matrix({{1.0}})));
    EXPECT_FALSE(Matrix(1, 2).bitwise_equal(Matrix(2, 1)));
}

TEST(Matrix, AllFinite) {
    Matrix a(2, 2, 1.0);
    EXPECT_TRUE(a.all_finite());
    a(1, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(a.all_finite());
    a(1, 1) = std::numeric_limits<double>::infinity();
    EXPECT_FALSE(a.all_finite());
}

TEST(MatrixProperty, MatmulIsAssociativeUpToRounding) {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = rng.gaussian_matrix(4, 5);
        const Matrix b = rng.gaussian_matrix(5, 3);
        const Matrix c = rng.gaussian_matrix(3, 6);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        EXPECT_LT(frobenius_norm(subtract(left, right)), 1e-12 * frobenius_norm(left));
    }
}

TEST(MatrixProperty, TransposeOfProduct) {
    Rng rng(5);
    const Matrix a = rng.gaussian_matrix(3, 4);
    const Matrix b = rng.gaussian_matrix(4, 2);
    const Matrix lhs = transpose(matmul(a, b));
    const Matrix rhs = matmul(transpose(b), transpose(a));
    EXPECT_LT(max_abs(subtract(lhs, rhs)), 1e-14);
}
