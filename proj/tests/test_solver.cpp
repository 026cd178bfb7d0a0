#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rbdlr/solver.hpp"
#include "rbdlr/synth.hpp"

using namespace rbdlr;

namespace {

struct RandomState {
    Matrix X;
    SolverState s;
    Hyperparams hp;
};

RandomState random_state(std::uint64_t seed, int n = 8, int N = 12) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RandomState r;
    r.X = oracle::random_matrix(rng, n, N);
    r.s = SolverState::initial(r.X, 0.1 + 5.0 * u(rng));
    r.s.E = oracle::random_matrix(rng, n, N, 0.1);
    r.s.U = r.X - r.s.E;
    r.s.Z = oracle::random_matrix(rng, N, N, 0.3);
    r.s.P = oracle::random_matrix(rng, n, n, 0.3);
    r.s.W = oracle::random_weights(rng, N);
    r.s.theta = oracle::random_matrix(rng, N, 1, 0.2).col(0);
    r.s.Y1 = oracle::random_matrix(rng, n, N);
    r.hp.alpha = 0.5 + u(rng);
    r.hp.beta = 0.05 + u(rng);
    r.hp.gamma = 0.1;
    r.hp.k = 3;
    return r;
}

oracle::SubproblemData subproblem(const RandomState& r) {
    return {r.s.U, r.s.W, r.s.Y1, r.s.mu, r.hp.alpha, r.hp.beta};
}

}  // namespace

TEST(UpdateCoefficients, ZeroInputs) {
    SolverState s = SolverState::initial(Matrix::Zero(3, 4), 1.0);
    EXPECT_TRUE(update_coefficients(s, Hyperparams{}).isZero(0.0));
}

TEST(UpdateCoefficients, HalfOfWeightsWhenUIsZero) {
    std::mt19937_64 rng(1);
    SolverState s = SolverState::initial(Matrix::Zero(3, 5), 2.0);
    s.W = oracle::random_weights(rng, 5);
    Hyperparams hp;
    hp.alpha = 1.0;
    // (2 + 2 alpha) Z = 2 alpha W, entry by entry
    const Matrix expected = s.W.unaryExpr([](double w) { return 2.0 * w / 4.0; });
    EXPECT_LT((update_coefficients(s, hp) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(UpdateCoefficients, StationaryForSubproblem) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RandomState r = random_state(seed);
        const Matrix Z = update_coefficients(r.s, r.hp);
        const auto d = subproblem(r);
        const auto f = [&](const Matrix& z) { return oracle::zp_objective(d, z, r.s.P, r.s.theta); };
        EXPECT_LT(oracle::relative_stationarity(f, Z), 1e-6);
    }
}

TEST(UpdateProjection, ZeroData) {
    SolverState s = SolverState::initial(Matrix::Zero(3, 4), 1.0);
    EXPECT_TRUE(update_projection(s, Hyperparams{}).isZero(0.0));
}

TEST(UpdateProjection, DirectSubstitution) {
    std::mt19937_64 rng(2);
    const Matrix U = oracle::random_matrix(rng, 4, 6);
    SolverState s = SolverState::initial(U, 3.0);
    Hyperparams hp;
    hp.beta = 0.0;
    const Matrix UUt = U * U.transpose();
    const Matrix expected =
        (3.0 * UUt) * (3.0 * UUt + 2.0 * Matrix::Identity(4, 4)).fullPivLu().inverse();
    EXPECT_LT((update_projection(s, hp) - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(UpdateProjection, StationaryForSubproblem) {
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        RandomState r = random_state(seed);
        const Matrix P = update_projection(r.s, r.hp);
        const auto d = subproblem(r);
        const auto f = [&](const Matrix& p) { return oracle::zp_objective(d, r.s.Z, p, r.s.theta); };
        EXPECT_LT(oracle::relative_stationarity(f, P), 1e-6);
    }
}

TEST(UpdateBias, EqualMatricesGiveZero) {
    std::mt19937_64 rng(3);
    const Matrix W = oracle::random_weights(rng, 5);
    EXPECT_TRUE(update_bias(W, W).isZero(0.0));
}

TEST(UpdateBias, TwoNodes) {
    Matrix W(2, 2);
    W << 0, 1, 1, 0;
    const Vector theta = update_bias(W, Matrix::Zero(2, 2));
    EXPECT_DOUBLE_EQ(theta(0), 0.5);
    EXPECT_DOUBLE_EQ(theta(1), 0.5);
}

TEST(UpdateBias, CommonShiftCancels) {
    std::mt19937_64 rng(4);
    const Matrix W = oracle::random_weights(rng, 6);
    const Matrix Z = oracle::random_matrix(rng, 6, 6);
    const Matrix D = oracle::random_matrix(rng, 6, 6);
    EXPECT_LT((update_bias(W + D, Z + D) - update_bias(W, Z)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(UpdateBias, StationaryForSubproblem) {
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
        RandomState r = random_state(seed);
        const Vector theta = update_bias(r.s.W, r.s.Z);
        const auto d = subproblem(r);
        const auto f = [&](const Matrix& t) { return oracle::zp_objective(d, r.s.Z, r.s.P, t.col(0)); };
        EXPECT_LT(oracle::relative_stationarity(f, Matrix(theta)), 1e-6);
    }
}

TEST(ColumnShrink, SmallColumnsVanish) {
    Matrix T(2, 2);
    T << 0.3, 3, 0.4, 4;  // norms 0.5 and 5
    const Matrix out = column_shrink(T, 0.5);
    EXPECT_TRUE(out.col(0).isZero(0.0));
    EXPECT_GT(out.col(1).norm(), 0.0);
}

TEST(ColumnShrink, ZeroThresholdIsIdentity) {
    const Matrix T = Matrix::Random(4, 5);
    EXPECT_EQ(column_shrink(T, 0.0), T);
}

TEST(ColumnShrink, WorkedExample) {
    Vector t(2);
    t << 3, 4;
    const Matrix out = column_shrink(Matrix(t), 1.0);
    EXPECT_NEAR(out(0, 0), 2.4, 1e-12);
    EXPECT_NEAR(out(1, 0), 3.2, 1e-12);
    EXPECT_LT((out.col(0) - oracle::prox_by_grid(t, 1.0)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ColumnShrink, NeverGrowsAndPreservesDirection) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix T = oracle::random_matrix(rng, 6, 8);
        const double tau = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
        const Matrix out = column_shrink(T, tau);
        for (int j = 0; j < 8; ++j) {
            EXPECT_LE(out.col(j).norm(), T.col(j).norm());
            const double scale = out.col(j).dot(T.col(j)) / T.col(j).squaredNorm();
            EXPECT_GE(scale, 0.0);
            EXPECT_LT((out.col(j) - scale * T.col(j)).norm(), 1e-12);
        }
    }
}

TEST(ColumnShrink, RejectsNegativeThreshold) { EXPECT_THROW(column_shrink(Matrix::Ones(2, 2), -1.0), InvalidInput); }

TEST(UpdateError, ExactReconstructionGivesNoError) {
    std::mt19937_64 rng(6);
    const Matrix X = oracle::random_matrix(rng, 4, 6);
    SolverState s = SolverState::initial(X, 1.0);
    s.Z = Matrix::Identity(6, 6);  // X = X Z + P X with P = 0
    Hyperparams hp;
    hp.gamma = 0.1;
    const auto [E, U] = update_error(X, s, hp);
    EXPECT_TRUE(E.isZero(0.0));
    EXPECT_EQ(U, X);
}

TEST(UpdateError, FullShrinkage) {
    std::mt19937_64 rng(7);
    const Matrix X = oracle::random_matrix(rng, 4, 6);
    SolverState s = SolverState::initial(X, 1e-3);
    Hyperparams hp;
    hp.gamma = 1.0;  // gamma / mu = 1000
    const auto [E, U] = update_error(X, s, hp);
    EXPECT_TRUE(E.isZero(0.0));
    EXPECT_EQ(U, X);
}

TEST(UpdateError, IsolatesGrossCorruption) {
    std::mt19937_64 rng(8);
    const Matrix clean = oracle::random_matrix(rng, 5, 7);
    Matrix X = clean;
    X.col(3) += oracle::random_matrix(rng, 5, 1, 50.0);
    SolverState s = SolverState::initial(X, 1.0);
    s.U = clean;
    s.Z = Matrix::Identity(7, 7);  // clean = clean Z
    Hyperparams hp;
    hp.gamma = 1.0;
    const auto [E, U] = update_error(X, s, hp);
    const Matrix theta = X - (s.U * s.Z + s.P * s.U);
    for (int j = 0; j < 7; ++j) {
        if (j == 3) {
            EXPECT_GT(E.col(j).norm(), 0.0);
            EXPECT_LT((E.col(j) - oracle::prox_by_grid(theta.col(j), 1.0)).cwiseAbs().maxCoeff(), 1e-6);
        } else {
            EXPECT_TRUE(E.col(j).isZero(0.0));
        }
    }
    EXPECT_EQ(U, X - E);
}

TEST(UpdateMultipliers, PenaltySchedule) {
    const Matrix X = Matrix::Ones(2, 3);
    SolverState s = SolverState::initial(X, 1e-6);
    Hyperparams hp;
    EXPECT_DOUBLE_EQ(update_multipliers(X, s, hp).mu, 1.12e-6);
    s.mu = hp.mu_max;
    EXPECT_EQ(update_multipliers(X, s, hp).mu, hp.mu_max);
}

TEST(UpdateMultipliers, ZeroResidualsKeepMultipliers) {
    std::mt19937_64 rng(9);
    const Matrix X = oracle::random_matrix(rng, 3, 4);
    SolverState s = SolverState::initial(X, 2.0);
    s.Z = Matrix::Identity(4, 4);
    s.Y1 = oracle::random_matrix(rng, 3, 4);
    s.Y2 = oracle::random_matrix(rng, 3, 4);
    const auto up = update_multipliers(X, s, Hyperparams{});
    EXPECT_EQ(up.Y1, s.Y1);
    EXPECT_EQ(up.Y2, s.Y2);
}

TEST(UpdateMultipliers, AccumulatesResiduals) {
    std::mt19937_64 rng(10);
    const Matrix X = oracle::random_matrix(rng, 3, 4);
    SolverState s = SolverState::initial(X, 0.5);
    s.Z = oracle::random_matrix(rng, 4, 4);
    s.P = oracle::random_matrix(rng, 3, 3);
    s.E = oracle::random_matrix(rng, 3, 4);
    const auto up = update_multipliers(X, s, Hyperparams{});
    EXPECT_LT((up.Y1 - 0.5 * (s.U - s.U * s.Z - s.P * s.U)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((up.Y2 - 0.5 * (X - s.E - s.U)).cwiseAbs().maxCoeff(), 1e-14);
}

namespace {

Dataset small_synthetic(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.num_subspaces = 3;
    spec.ambient_dim = 30;
    spec.basis_dim = 4;
    spec.samples_per_subspace = 5;
    spec.seed = seed;
    return generate_subspace_data(spec);
}

}  // namespace

TEST(Fit, FllrrModeLeavesWeightsAndBiasZero) {
    Hyperparams hp;
    hp.mode = Mode::FLLRR;
    hp.alpha = hp.beta = 0.0;
    hp.gamma = 0.5;
    const FitResult r = fit(small_synthetic(1), hp);
    EXPECT_TRUE(r.W.isZero(0.0));
    EXPECT_TRUE(r.theta.isZero(0.0));
}

TEST(Fit, BitwiseReproducible) {
    const Dataset d = small_synthetic(2);
    Hyperparams hp;
    hp.gamma = 0.5;
    const FitResult a = fit(d, hp);
    const FitResult b = fit(d, hp);
    EXPECT_EQ(a.Z, b.Z);
    EXPECT_EQ(a.P, b.P);
    EXPECT_EQ(a.E, b.E);
    EXPECT_EQ(a.W, b.W);
    EXPECT_EQ(a.theta, b.theta);
    EXPECT_EQ(a.report.objective_history, b.report.objective_history);
    EXPECT_EQ(a.report.residual_history, b.report.residual_history);
}

TEST(Fit, ReportConsistency) {
    Hyperparams hp;
    hp.gamma = 0.5;
    const FitResult r = fit(small_synthetic(3), hp);
    EXPECT_EQ(r.report.residual_history.size(), static_cast<std::size_t>(r.report.iterations));
    EXPECT_EQ(r.report.objective_history.size(), static_cast<std::size_t>(r.report.iterations));
    const auto [r1, r2] = r.report.residual_history.back();
    EXPECT_EQ(r.report.converged, std::max(r1, r2) < hp.eps);
    EXPECT_TRUE(r.report.converged);
}

TEST(Fit, IterationInvariants) {
    const Dataset d = small_synthetic(4);
    Hyperparams hp;
    hp.gamma = 0.3;
    double last_mu = 0.0;
    int seen = 0;
    fit(d, hp, [&](const SolverState& s) {
        ++seen;
        EXPECT_GE(s.mu, last_mu);
        EXPECT_LE(s.mu, hp.mu_max);
        last_mu = s.mu;
        EXPECT_EQ(s.U, d.X - s.E);
        EXPECT_TRUE(s.Y2.isZero(0.0));
        EXPECT_EQ(s.W, s.W.transpose());
        EXPECT_GE(s.W.minCoeff(), 0.0);
        EXPECT_TRUE(s.W.diagonal().isZero(0.0));
        EXPECT_NEAR(s.M.trace(), 3.0, 1e-8);  // k from the labels
        Eigen::SelfAdjointEigenSolver<Matrix> eig(s.M);
        EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8);
        EXPECT_LE(eig.eigenvalues().maxCoeff(), 1.0 + 1e-8);
    });
    EXPECT_GT(seen, 0);
}

TEST(Fit, LargeGammaKeepsCleanDataErrorFree) {
    const Dataset d = small_synthetic(5);
    Hyperparams hp;
    hp.gamma = 1e3;
    fit(d, hp, [](const SolverState& s) { EXPECT_TRUE(s.E.isZero(0.0)); });
}

TEST(Fit, DivergenceIsReported) {
    Dataset d{Matrix::Constant(3, 4, 1e200), std::nullopt};
    Hyperparams hp;
    hp.k = 2;
    hp.mu0 = 1.0;
    try {
        fit(d, hp);
        FAIL() << "expected divergence";
    } catch (const SolverDivergence& e) {
        EXPECT_EQ(e.iteration, 1);
        EXPECT_NE(std::string(e.what()).find("iteration 1"), std::string::npos);
    }
}

TEST(Fit, RequiresBlockCountWithoutLabels) {
    Dataset d = small_synthetic(6);
    d.labels.reset();
    EXPECT_THROW(fit(d, Hyperparams{}), InvalidInput);
}

TEST(Fit, SyntheticBenchmarkConvergesWithin300Iterations) {
    SyntheticSpec spec;
    spec.seed = 0;
    Hyperparams hp;
    hp.k = 10;
    hp.max_iter = 300;
    const FitResult r = fit(generate_subspace_data(spec), hp);
    EXPECT_TRUE(r.report.converged);
    EXPECT_LE(r.report.iterations, 300);
}

TEST(FitFllrr, MatchesFitWithZeroCouplings) {
    const Dataset d = small_synthetic(7);
    Hyperparams hp;
    hp.gamma = 0.4;
    const FitResult a = fit_fllrr(d, hp);
    Hyperparams manual = hp;
    manual.mode = Mode::FLLRR;
    manual.alpha = manual.beta = 0.0;
    const FitResult b = fit(d, manual);
    EXPECT_EQ(a.Z, b.Z);
    EXPECT_EQ(a.P, b.P);
    EXPECT_EQ(a.E, b.E);
    EXPECT_TRUE(a.W.isZero(0.0));
}

TEST(FitFllrr, ObjectiveIsReducedForm) {
    const Dataset d = small_synthetic(8);
    Hyperparams hp;
    hp.gamma = 0.2;
    std::vector<double> expected;
    const FitResult r = fit_fllrr(d, hp, [&](const SolverState& s) {
        expected.push_back(s.Z.squaredNorm() + s.P.squaredNorm() + hp.gamma * oracle::l21(s.E));
    });
    ASSERT_EQ(expected.size(), r.report.objective_history.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        EXPECT_NEAR(r.report.objective_history[i], expected[i], 1e-9);
}
