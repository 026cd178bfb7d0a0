#pragma once

#include "rbdlr/blockdiag.hpp"
#include "rbdlr/types.hpp"

namespace rbdlr {

/// Sum of the Euclidean norms of the columns.
inline double l21_norm(const Matrix& A) { return A.colwise().norm().sum(); }

/// ||W||_k: sum of the k smallest eigenvalues of the Laplacian of W.
/// Eigenvalues within 1e-12 of zero count as zero.
inline double block_diag_value(const Matrix& W, int k) {
    detail::require_weights(W);
    require(k >= 1 && k <= W.rows(), "k must lie in [1, N]");
    const Vector lambda = ascending_eigenvalues(laplacian(W));
    double sum = 0.0;
    for (int i = 0; i < k; ++i)
        if (std::abs(lambda(i)) >= 1e-12) sum += lambda(i);
    return std::max(0.0, sum);
}

/// Full monitored objective
///   ||Z||^2 + ||P||^2 + ||A+ - A- W||^2 + beta ||W||_k + gamma ||E||_{2,1}
/// with the auxiliary pair evaluated at U = X - E.
inline double objective_value(const Matrix& X, const SolverState& state, const Hyperparams& hp) {
    const auto n = X.rows(), N = X.cols();
    require(state.Z.rows() == N && state.Z.cols() == N, "Z shape mismatch: " + shape_of(state.Z));
    require(state.P.rows() == n && state.P.cols() == n, "P shape mismatch: " + shape_of(state.P));
    require(state.E.rows() == n && state.E.cols() == N, "E shape mismatch: " + shape_of(state.E));
    require(state.W.rows() == N && state.W.cols() == N, "W shape mismatch: " + shape_of(state.W));
    require(state.theta.size() == N, "theta length mismatch");

    const Matrix U = X - state.E;
    const AuxPair aux = assemble_aux(state.Z, state.theta, state.P, U, hp.alpha, hp.beta);
    double value = state.Z.squaredNorm() + state.P.squaredNorm() +
                   (aux.A_plus - aux.A_minus * state.W).squaredNorm() + hp.gamma * l21_norm(state.E);
    if (hp.beta != 0.0) value += hp.beta * block_diag_value(state.W, hp.k);
    return value;
}

}  // namespace rbdlr
