#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rbdlr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

// Error kinds. Callers (the CLI in particular) distinguish them by type.
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverDivergence : std::runtime_error {
    SolverDivergence(const std::string& what, int iteration)
        : std::runtime_error(what), iteration(iteration) {}
    int iteration;
};

struct UndefinedRatio : std::domain_error {
    using std::domain_error::domain_error;
};

inline void require(bool ok, const std::string& message) {
    if (!ok) throw InvalidInput(message);
}

inline std::string shape_of(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

/// Samples are the columns of X.
struct Dataset {
    Matrix X;
    std::optional<Labels> labels;

    Eigen::Index dim() const { return X.rows(); }
    Eigen::Index samples() const { return X.cols(); }

    void validate() const {
        require(X.rows() >= 1 && X.cols() >= 1, "dataset must be non-empty, got " + shape_of(X));
        require(X.allFinite(), "dataset contains non-finite entries");
        if (labels) {
            require(static_cast<Eigen::Index>(labels->size()) == X.cols(),
                    "label count " + std::to_string(labels->size()) + " does not match " +
                        std::to_string(X.cols()) + " samples");
            for (int l : *labels) require(l >= 0, "labels must be nonnegative");
        }
    }
};

/// Number of distinct values in a label vector.
inline int distinct_count(const Labels& labels) {
    std::vector<int> sorted(labels);
    std::sort(sorted.begin(), sorted.end());
    return static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

enum class Mode { RBDLR, FLLRR };

inline std::string to_string(Mode mode) { return mode == Mode::RBDLR ? "rbdlr" : "fllrr"; }

/// Tuning record. Defaults follow the published initialization of the ALM
/// loop (mu0, mu_max, eta, eps) and the anchor values of the parameter study.
struct Hyperparams {
    double alpha = 1.0;
    double beta = 1e-5;
    double gamma = 1e-2;
    int k = 0;  // 0 means "not set"; see resolve_block_count
    double mu0 = 1e-6;
    double mu_max = 1e10;
    double eta = 1.12;
    double eps = 1e-7;
    int max_iter = 500;
    Mode mode = Mode::RBDLR;

    void validate(Eigen::Index num_samples) const {
        require(alpha >= 0.0 && beta >= 0.0, "alpha and beta must be nonnegative");
        require(gamma > 0.0, "gamma must be positive");
        require(k >= 1, "block count k must be a positive integer");
        require(k <= num_samples, "block count k=" + std::to_string(k) + " exceeds the " +
                                      std::to_string(num_samples) + " samples");
        require(mu0 > 0.0 && mu_max > 0.0, "mu0 and mu_max must be positive");
        require(mu0 <= mu_max, "mu0 must not exceed mu_max");
        require(eta > 1.0, "eta must be greater than 1");
        require(eps > 0.0, "eps must be positive");
        require(max_iter >= 1, "max_iter must be positive");
        if (mode == Mode::FLLRR)
            require(alpha == 0.0 && beta == 0.0, "mode fllrr requires alpha = beta = 0");
        else
            require(alpha > 0.0, "mode rbdlr requires alpha > 0");
    }
};

/// Fills in k from the labels when it was left unset.
inline Hyperparams resolve_block_count(Hyperparams hp, const Dataset& data) {
    if (hp.k == 0) {
        if (hp.mode == Mode::FLLRR) {
            hp.k = 1;  // unused without the block-diagonal term
            return hp;
        }
        if (!data.labels)
            throw InvalidInput("block count k is required when the dataset has no labels");
        hp.k = distinct_count(*data.labels);
    }
    return hp;
}

/// Every iterate of the ALM loop.
struct SolverState {
    Matrix U, Z, P, E, W, M;
    Vector theta;
    Matrix Y1, Y2;
    double mu = 0.0;
    int iter = 0;

    /// Algorithm start point: U = X, everything else zero.
    static SolverState initial(const Matrix& X, double mu0) {
        const auto n = X.rows(), N = X.cols();
        SolverState s;
        s.U = X;
        s.Z = Matrix::Zero(N, N);
        s.P = Matrix::Zero(n, n);
        s.E = Matrix::Zero(n, N);
        s.W = Matrix::Zero(N, N);
        s.M = Matrix::Zero(N, N);
        s.theta = Vector::Zero(N);
        s.Y1 = Matrix::Zero(n, N);
        s.Y2 = Matrix::Zero(n, N);
        s.mu = mu0;
        return s;
    }

    bool all_finite() const {
        return U.allFinite() && Z.allFinite() && P.allFinite() && E.allFinite() &&
               W.allFinite() && M.allFinite() && theta.allFinite() && Y1.allFinite() &&
               Y2.allFinite() && std::isfinite(mu);
    }
};

struct FitReport {
    int iterations = 0;
    bool converged = false;
    std::vector<std::pair<double, double>> residual_history;
    std::vector<double> objective_history;
    double wall_time_seconds = 0.0;
};

struct FitResult {
    Matrix Z, P, E, W;
    Vector theta;
    FitReport report;
};

}  // namespace rbdlr
