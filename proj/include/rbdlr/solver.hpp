#pragma once

// Inexact-ALM alternating solver. One iteration updates, in order:
// Z, P, theta, E/U, M and W, then the multipliers and the penalty mu.

#include <chrono>
#include <functional>
#include <string>
#include <utility>

#include "rbdlr/blockdiag.hpp"
#include "rbdlr/objective.hpp"
#include "rbdlr/types.hpp"

namespace rbdlr {

namespace detail {

inline Matrix spd_solve(const Matrix& A, const Matrix& B, const char* what) {
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + " system is not positive definite");
    return llt.solve(B);
}

inline Vector ones(Eigen::Index n) { return Vector::Ones(n); }

}  // namespace detail

/// Z = (2I + 2 alpha I + mu U^T U)^{-1} Psi with
/// Psi = 2 alpha W + U^T Y1 + mu U^T U - mu U^T P U - 2 alpha theta 1^T.
/// P is whatever the state holds (the previous iterate inside fit).
inline Matrix update_coefficients(const SolverState& s, const Hyperparams& hp) {
    const auto N = s.U.cols();
    const Matrix UtU = s.U.transpose() * s.U;
    Matrix system = s.mu * UtU;
    system.diagonal().array() += 2.0 + 2.0 * hp.alpha;

    Matrix psi = s.U.transpose() * s.Y1 + s.mu * UtU - s.mu * (s.U.transpose() * (s.P * s.U));
    if (hp.alpha != 0.0) psi += 2.0 * hp.alpha * (s.W - s.theta * detail::ones(N).transpose());
    return detail::spd_solve(system, psi, "coefficient");
}

/// P = (Y1 U^T + mu U U^T - mu U Z U^T)(Gamma + 2I)^{-1}, where
/// Gamma = U (mu I + 2 beta (I - W)(I - W)^T) U^T.
inline Matrix update_projection(const SolverState& s, const Hyperparams& hp) {
    const Matrix numerator = (s.Y1 + s.mu * (s.U - s.U * s.Z)) * s.U.transpose();
    Matrix gamma = s.mu * (s.U * s.U.transpose());
    if (hp.beta != 0.0) {
        const Matrix B = s.U - s.U * s.W;
        gamma.noalias() += 2.0 * hp.beta * (B * B.transpose());
    }
    gamma.diagonal().array() += 2.0;
    // gamma is symmetric, so P^T = gamma^{-1} numerator^T.
    return detail::spd_solve(gamma, numerator.transpose(), "projection").transpose();
}

/// theta = (W 1 - Z 1) / N.
inline Vector update_bias(const Matrix& W, const Matrix& Z) {
    require(W.rows() == Z.rows() && W.cols() == Z.cols(), "W and Z shapes differ");
    return (W.rowwise().sum() - Z.rowwise().sum()) / static_cast<double>(Z.cols());
}

/// Column-wise proximal operator of tau * ||.||_2.
inline Matrix column_shrink(const Matrix& Theta, double tau) {
    require(tau >= 0.0, "shrinkage threshold must be nonnegative");
    Matrix out = Matrix::Zero(Theta.rows(), Theta.cols());
    for (Eigen::Index i = 0; i < Theta.cols(); ++i) {
        const double norm = Theta.col(i).norm();
        if (tau < norm) out.col(i) = ((norm - tau) / norm) * Theta.col(i);
    }
    return out;
}

/// Error step on the reconstruction residual
///   Theta = X - (U Z + P U) + Y2 / mu,  E = shrink(Theta, gamma / mu),
/// followed by the hard assignment U = X - E.
inline std::pair<Matrix, Matrix> update_error(const Matrix& X, const SolverState& s, const Hyperparams& hp) {
    const Matrix theta = X - (s.U * s.Z + s.P * s.U) + s.Y2 / s.mu;
    Matrix E = column_shrink(theta, hp.gamma / s.mu);
    Matrix U = X - E;
    return {std::move(E), std::move(U)};
}

struct MultiplierUpdate {
    Matrix Y1, Y2;
    double mu;
};

/// Y1 += mu (U - U Z - P U), Y2 += mu (X - E - U), mu <- min(eta mu, mu_max).
inline MultiplierUpdate update_multipliers(const Matrix& X, const SolverState& s, const Hyperparams& hp) {
    MultiplierUpdate out;
    out.Y1 = s.Y1 + s.mu * (s.U - s.U * s.Z - s.P * s.U);
    out.Y2 = s.Y2 + s.mu * (X - s.E - s.U);
    out.mu = std::min(hp.eta * s.mu, hp.mu_max);
    return out;
}

/// (r1, r2) = (||U - U Z - P U||_inf, ||X - E - U||_inf), max-abs entry.
inline std::pair<double, double> residuals(const Matrix& X, const SolverState& s) {
    return {detail::max_abs(s.U - s.U * s.Z - s.P * s.U), detail::max_abs(X - s.E - s.U)};
}

/// One full iteration at the state's current penalty mu.
inline void iterate(const Matrix& X, SolverState& s, const Hyperparams& hp) {
    s.Z = update_coefficients(s, hp);
    s.P = update_projection(s, hp);
    if (hp.mode == Mode::RBDLR) s.theta = update_bias(s.W, s.Z);
    std::tie(s.E, s.U) = update_error(X, s, hp);
    if (hp.mode == Mode::RBDLR) {
        s.M = update_fantope(laplacian(s.W), hp.k);
        const AuxPair aux = assemble_aux(s.Z, s.theta, s.P, s.U, hp.alpha, hp.beta);
        s.W = project_weights(solve_weights(aux, s.M, hp.beta));
    }
    auto [Y1, Y2, mu] = update_multipliers(X, s, hp);
    s.Y1 = std::move(Y1);
    s.Y2 = std::move(Y2);
    s.mu = mu;
    ++s.iter;
}

/// Called after every iteration with the complete state.
using IterationObserver = std::function<void(const SolverState&)>;

/// Runs the ALM loop until max(r1, r2) < eps or max_iter iterations.
/// In FLLRR mode the theta, M and W steps are skipped and stay zero.
inline FitResult fit(const Dataset& data, const Hyperparams& hp_in, const IterationObserver& observer = {}) {
    data.validate();
    const Hyperparams hp = resolve_block_count(hp_in, data);
    hp.validate(data.samples());

    const auto start = std::chrono::steady_clock::now();
    const Matrix& X = data.X;
    SolverState s = SolverState::initial(X, hp.mu0);
    FitResult result;
    FitReport& report = result.report;

    while (s.iter < hp.max_iter) {
        try {
            iterate(X, s, hp);
        } catch (const NumericalError&) {
            // a breakdown caused by overflow is divergence, not ill-conditioning
            if (s.all_finite()) throw;
            ++s.iter;
        }
        if (!s.all_finite())
            throw SolverDivergence("non-finite iterate at iteration " + std::to_string(s.iter), s.iter);
        if (observer) observer(s);
        const auto r = residuals(X, s);
        report.residual_history.push_back(r);
        report.objective_history.push_back(objective_value(X, s, hp));
        if (std::max(r.first, r.second) < hp.eps) {
            report.converged = true;
            break;
        }
    }

    report.iterations = s.iter;
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.Z = std::move(s.Z);
    result.P = std::move(s.P);
    result.E = std::move(s.E);
    result.W = std::move(s.W);
    result.theta = std::move(s.theta);
    return result;
}

/// The alpha = beta = 0 special case.
inline FitResult fit_fllrr(const Dataset& data, Hyperparams hp, const IterationObserver& observer = {}) {
    hp.mode = Mode::FLLRR;
    hp.alpha = 0.0;
    hp.beta = 0.0;
    return fit(data, hp, observer);
}

}  // namespace rbdlr
