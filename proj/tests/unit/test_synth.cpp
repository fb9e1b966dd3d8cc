#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "molf/errors.hpp"
#include "molf/synth/spectral_task.hpp"

using namespace molf;

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

Eigen::VectorXd singular_values(const Matrix& m) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(to_eigen(m)).singularValues();
}

SpectralParams heavy(double p) {
    SpectralParams s;
    s.power = p;
    return s;
}

SpectralParams concentrated(std::size_t r) {
    SpectralParams s;
    s.rank = r;
    return s;
}

} // namespace

TEST(SpectralTask, ConcentratedHasExactRank) {
    Rng rng(1);
    const SpectralTask t = gen_spectral_target(16, 16, Regime::concentrated, concentrated(4), rng);
    const Eigen::VectorXd s = singular_values(t.delta_star);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(s(i), 1.0, 1e-12);
    for (int i = 4; i < 16; ++i) EXPECT_LT(s(i), 1e-12);
    EXPECT_EQ(std::count_if(t.spectrum.begin(), t.spectrum.end(), [](double v) { return v != 0.0; }), 4);
}

TEST(SpectralTask, HeavyTailSpectrumMatchesSvd) {
    Rng rng(2);
    const SpectralTask t = gen_spectral_target(32, 24, Regime::heavy_tail, heavy(0.1), rng);
    ASSERT_EQ(t.spectrum.size(), 24u);
    const Eigen::VectorXd s = singular_values(t.delta_star);
    for (int i = 0; i < 24; ++i) {
        EXPECT_DOUBLE_EQ(t.spectrum[i], std::pow(i + 1.0, -0.1));
        EXPECT_NEAR(s(i), t.spectrum[i], 1e-12);
    }
}

TEST(SpectralTask, HeavyTailClosedFormTail) {
    Rng rng(3);
    const SpectralTask t = gen_spectral_target(32, 32, Regime::heavy_tail, heavy(0.1), rng);
    double expected = 0.0;
    for (int i = 9; i <= 32; ++i) expected += std::pow(i, -0.2);
    EXPECT_NEAR(tail_energy(t.spectrum, 8), expected, 1e-12);
}

TEST(SpectralTask, FactorsAreOrthonormal) {
    Rng rng(4);
    const SpectralTask t = gen_spectral_target(20, 12, Regime::heavy_tail, heavy(0.5), rng);
    EXPECT_LT(max_abs(subtract(matmul(transpose(t.u), t.u), Matrix::identity(12))), 1e-13);
    EXPECT_LT(max_abs(subtract(matmul(transpose(t.v), t.v), Matrix::identity(12))), 1e-13);
    EXPECT_TRUE(compose_delta(t.u, t.spectrum, t.v).bitwise_equal(t.delta_star));
}

TEST(SpectralTask, CustomSpectrumPaddedWithZeros) {
    SpectralParams p;
    p.custom_spectrum = {2.0, 0.5};
    Rng rng(5);
    const SpectralTask t = gen_spectral_target(4, 3, Regime::custom, p, rng);
    EXPECT_EQ(t.spectrum, (std::vector<double>{2.0, 0.5, 0.0}));
}

TEST(SpectralTask, Errors) {
    Rng rng(6);
    EXPECT_THROW(gen_spectral_target(8, 8, Regime::concentrated, concentrated(9), rng), ContractError);
    SpectralParams p;
    p.custom_spectrum = {1, 1, 1, 1, 1};
    EXPECT_THROW(gen_spectral_target(8, 4, Regime::custom, p, rng), ContractError);
    p.custom_spectrum = {1.0, -1.0};
    EXPECT_THROW(gen_spectral_target(8, 4, Regime::custom, p, rng), ContractError);
    p.custom_spectrum = {0.5, 2.0};
    EXPECT_THROW(gen_spectral_target(8, 4, Regime::custom, p, rng), ContractError);
    EXPECT_THROW(parse_regime("spiky"), ContractError);
}

TEST(SpectralTask, SameSeedSameTask) {
    Rng a(7), b(7);
    const SpectralTask t1 = gen_spectral_target(10, 6, Regime::heavy_tail, heavy(0.1), a);
    const SpectralTask t2 = gen_spectral_target(10, 6, Regime::heavy_tail, heavy(0.1), b);
    EXPECT_TRUE(t1.w_base.bitwise_equal(t2.w_base));
    EXPECT_TRUE(t1.delta_star.bitwise_equal(t2.delta_star));
}

TEST(TailEnergy, HandValues) {
    const std::vector<double> s{3, 2, 1};
    EXPECT_EQ(tail_energy(s, 2), 1.0);
    EXPECT_EQ(tail_energy(s, 0), 14.0);
    EXPECT_EQ(tail_energy(s, 3), 0.0);
    EXPECT_EQ(tail_energy(s, 10), 0.0);
    EXPECT_THROW(tail_energy(s, -1), ContractError);
}

TEST(TailEnergy, ConcentratedAtOrAboveRankIsZero) {
    Rng rng(8);
    const SpectralTask t = gen_spectral_target(16, 16, Regime::concentrated, concentrated(8), rng);
    EXPECT_EQ(tail_energy(t.spectrum, 8), 0.0);
    EXPECT_EQ(tail_energy(t.spectrum, 12), 0.0);
    EXPECT_EQ(tail_energy(t.spectrum, 7), 1.0);
}

TEST(BestRank, MatchesEigenTruncatedSvdAndEckartYoung) {
    Rng rng(9);
    const SpectralTask t = gen_spectral_target(24, 18, Regime::heavy_tail, heavy(0.3), rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(t.delta_star), Eigen::ComputeThinU | Eigen::ComputeThinV);
    for (std::size_t r : {1, 4, 10}) {
        const Eigen::MatrixXd ref = svd.matrixU().leftCols(r) *
                                    svd.singularValues().head(r).asDiagonal() *
                                    svd.matrixV().leftCols(r).transpose();
        const Matrix mine = best_rank_approximation(t, r);
        EXPECT_LT((to_eigen(mine) - ref).cwiseAbs().maxCoeff(), 1e-12);
        const Matrix student = add(t.w_base, mine);
        EXPECT_NEAR(population_loss(t, student), 0.5 * tail_energy(t.spectrum, r), 1e-12);
    }
}

TEST(SampleBatch, NoiselessTeacherHasZeroError) {
    Rng rng(10);
    const SpectralTask t = gen_spectral_target(6, 5, Regime::heavy_tail, heavy(0.1), rng);
    const Batch b = sample_batch(t, 32, rng);
    EXPECT_EQ(b.x.cols(), 32u);
    EXPECT_LT(max_abs(subtract(b.y, matmul(t.teacher(), b.x))), 1e-15);
    EXPECT_THROW(sample_batch(t, 0, rng), ContractError);
}

TEST(PopulationLoss, ClosedFormMatchesMonteCarlo) {
    Rng rng(11);
    SpectralParams p = heavy(0.1);
    p.noise_std = 0.3;
    const SpectralTask t = gen_spectral_target(8, 8, Regime::heavy_tail, p, rng);
    const Matrix student = add(t.w_base, scale(t.delta_star, 0.5));
    const Matrix bias = rng.gaussian_matrix(8, 1, 0.2);
    const Batch b = sample_batch(t, 100000, rng);
    const Matrix err = subtract(b.y, add_bias(matmul(student, b.x), bias));
    const double empirical = 0.5 * frobenius_norm_sq(err) / 100000.0;
    const double closed = population_loss(t, student, &bias);
    EXPECT_NEAR(empirical / closed, 1.0, 0.02);
}

TEST(PopulationLoss, ModuleFormMatchesDenseForm) {
    Rng rng(12);
    const SpectralTask t = gen_spectral_target(10, 7, Regime::heavy_tail, heavy(0.1), rng);
    MoLFModule m;
    m.name = "s";
    m.weight = t.w_base;
    for (std::size_t r : {2, 3}) {
        LoRAExpert e;
        e.rank = r;
        m.experts.push_back(e);
    }
    init_experts(m, rng);
    for (auto& e : m.experts) e.b = rng.gaussian_matrix(10, e.rank, 0.1);
    Matrix fused = m.weight;
    for (const auto& e : m.experts) fused = add(fused, scale(matmul(e.b, e.a), e.scale()));
    EXPECT_NEAR(population_loss(t, m), population_loss(t, fused), 1e-12);
}
