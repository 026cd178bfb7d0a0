#pragma once

// k-block-diagonal regularizer machinery: graph Laplacian of the weights,
// the Fantope step, the stacked auxiliary pair and the constrained W solve.

#include <cmath>

#include "rbdlr/types.hpp"

namespace rbdlr {

namespace detail {

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline void require_square(const Matrix& m, const char* name) {
    require(m.rows() == m.cols(), std::string(name) + " must be square, got " + shape_of(m));
}

inline void require_symmetric(const Matrix& m, const char* name) {
    require_square(m, name);
    const double tol = 1e-12 * std::max(1.0, max_abs(m));
    require(max_abs(m - m.transpose()) <= tol, std::string(name) + " must be symmetric");
}

inline void require_weights(const Matrix& W) {
    require_symmetric(W, "W");
    require(W.size() == 0 || W.minCoeff() >= 0.0, "W must be entrywise nonnegative");
}

}  // namespace detail

/// L_W = Diag(W 1) - W.
inline Matrix laplacian(const Matrix& W) {
    detail::require_symmetric(W, "W");
    Matrix L = -W;
    L.diagonal() += W.rowwise().sum();
    return L;
}

/// Eigenvalues of a symmetric matrix in ascending order.
inline Vector ascending_eigenvalues(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
    return eig.eigenvalues();
}

/// Minimizer of <L, M> over the Fantope {0 <= M <= I, tr M = k}: the
/// projector onto the eigenvectors of the k smallest eigenvalues of L.
/// When lambda_k == lambda_{k+1} the projector is not unique; whichever one
/// the eigensolver produces is returned.
inline Matrix update_fantope(const Matrix& L, int k) {
    detail::require_symmetric(L, "L");
    require(k >= 1, "k must be positive");
    require(k <= L.rows(), "k=" + std::to_string(k) + " exceeds dimension " + std::to_string(L.rows()));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(L);
    if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
    const auto Vk = eig.eigenvectors().leftCols(k);
    return Vk * Vk.transpose();
}

/// The stacked matrices A+ and A- of the W subproblem.
struct AuxPair {
    Matrix A_plus;   // [sqrt(a)(Z + theta 1^T); sqrt(b) P U]
    Matrix A_minus;  // [sqrt(a) I;              sqrt(b) P U]
};

inline AuxPair assemble_aux(const Matrix& Z, const Vector& theta, const Matrix& P, const Matrix& U,
                            double alpha, double beta) {
    const auto N = Z.rows();
    const auto n = U.rows();
    detail::require_square(Z, "Z");
    detail::require_square(P, "P");
    require(theta.size() == N, "theta length must match Z");
    require(U.cols() == N, "U must have " + std::to_string(N) + " columns, got " + shape_of(U));
    require(P.rows() == n, "P must be " + std::to_string(n) + "x" + std::to_string(n));
    require(alpha >= 0.0 && beta >= 0.0, "alpha and beta must be nonnegative");

    const double sa = std::sqrt(alpha), sb = std::sqrt(beta);
    const Matrix PU = sb * (P * U);
    AuxPair aux{Matrix(N + n, N), Matrix(N + n, N)};
    aux.A_plus.topRows(N) = sa * (Z + theta * Vector::Ones(N).transpose());
    aux.A_plus.bottomRows(n) = PU;
    aux.A_minus.topRows(N) = sa * Matrix::Identity(N, N);
    aux.A_minus.bottomRows(n) = PU;
    return aux;
}

/// Unconstrained stationary point of
///   ||A+ - A- W||_F^2 + beta <Diag(W 1) - W, M>
/// i.e. 2 A-^T A- W = 2 A-^T A+ - beta (diag(M) 1^T - M).
inline Matrix solve_weights(const AuxPair& aux, const Matrix& M, double beta) {
    const auto N = aux.A_minus.cols();
    require(aux.A_plus.rows() == aux.A_minus.rows() && aux.A_plus.cols() == N,
            "A+ and A- must have equal shapes");
    require(M.rows() == N && M.cols() == N, "M must be " + std::to_string(N) + "x" + std::to_string(N));

    const Matrix normal = 2.0 * aux.A_minus.transpose() * aux.A_minus;
    Matrix rhs = 2.0 * aux.A_minus.transpose() * aux.A_plus;
    rhs.noalias() -= beta * (M.diagonal() * Vector::Ones(N).transpose() - M);

    Eigen::LLT<Matrix> llt(normal);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14))
        throw NumericalError("weight system 2 A-^T A- is singular (alpha = 0 with rank-deficient P U?)");
    return llt.solve(rhs);
}

/// Symmetrize, clamp at zero, zero the diagonal, in that order.
inline Matrix project_weights(const Matrix& W_hat) {
    detail::require_square(W_hat, "W");
    Matrix W = (0.5 * (W_hat + W_hat.transpose())).cwiseMax(0.0);
    W.diagonal().setZero();
    return W;
}

}  // namespace rbdlr
