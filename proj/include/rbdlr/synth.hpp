#pragma once

// Synthetic union-of-subspaces benchmark and Gaussian corruption.
//
// Randomness comes from std::mt19937_64, whose output sequence is fixed by
// the C++ standard. Normal deviates are produced here with Box-Muller rather
// than std::normal_distribution (whose algorithm is implementation-defined),
// so a seed reproduces the same data on every platform.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "rbdlr/types.hpp"

namespace rbdlr {

class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // uniform in (0, 1] from the top 53 bits
        const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Column-major fill.
    Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = (*this)();
        return m;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct SyntheticSpec {
    int num_subspaces = 10;
    int ambient_dim = 200;
    int basis_dim = 10;
    int samples_per_subspace = 9;
    std::uint64_t seed = 0;

    void validate() const {
        require(num_subspaces >= 1 && ambient_dim >= 1 && basis_dim >= 1 && samples_per_subspace >= 1,
                "synthetic dimensions must be positive");
        require(basis_dim <= ambient_dim, "basis_dim " + std::to_string(basis_dim) +
                                              " exceeds ambient_dim " + std::to_string(ambient_dim));
    }
};

namespace detail {

/// Q factor of a Gaussian matrix with the signs fixed so diag(R) > 0.
inline Matrix orthonormal_factor(const Matrix& G) {
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ() * Matrix::Identity(G.rows(), G.cols());
    const Matrix& R = qr.matrixQR();
    for (Eigen::Index j = 0; j < G.cols(); ++j)
        if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
    return Q;
}

}  // namespace detail

/// Square orthogonal matrix with determinant +1.
inline Matrix random_rotation(NormalSource& normal, Eigen::Index dim) {
    Matrix G = detail::orthonormal_factor(normal.matrix(dim, dim));
    if (G.determinant() < 0.0) G.col(0) = -G.col(0);
    return G;
}

/// Column-orthonormal dim x rank matrix.
inline Matrix random_orthonormal(NormalSource& normal, Eigen::Index dim, Eigen::Index rank) {
    return detail::orthonormal_factor(normal.matrix(dim, rank));
}

struct SyntheticData {
    Dataset data;
    std::vector<Matrix> bases;  // H_1 .. H_K
    Matrix rotation;            // G
};

/// K subspaces with bases H_{i+1} = G H_i, each sampled as X_i = H_i C_i with
/// C_i i.i.d. N(0, 1). Draw order: G, then H_1, then C_1 .. C_K.
inline SyntheticData generate_subspace_ensemble(const SyntheticSpec& spec) {
    spec.validate();
    NormalSource normal(spec.seed);
    SyntheticData out;
    out.rotation = random_rotation(normal, spec.ambient_dim);

    const Eigen::Index per = spec.samples_per_subspace;
    Matrix X(spec.ambient_dim, spec.num_subspaces * per);
    Labels labels(static_cast<std::size_t>(X.cols()));
    Matrix H = random_orthonormal(normal, spec.ambient_dim, spec.basis_dim);
    for (int i = 0; i < spec.num_subspaces; ++i) {
        if (i > 0) H = out.rotation * H;
        X.middleCols(i * per, per) = H * normal.matrix(spec.basis_dim, per);
        for (Eigen::Index j = 0; j < per; ++j) labels[static_cast<std::size_t>(i * per + j)] = i;
        out.bases.push_back(H);
    }
    out.data.X = std::move(X);
    out.data.labels = std::move(labels);
    return out;
}

inline Dataset generate_subspace_data(const SyntheticSpec& spec) {
    return generate_subspace_ensemble(spec).data;
}

/// X plus i.i.d. N(0, variance) noise.
inline Matrix add_gaussian_noise(const Matrix& X, double variance, std::uint64_t seed) {
    require(variance >= 0.0, "noise variance must be nonnegative");
    if (variance == 0.0) return X;
    NormalSource normal(seed);
    return X + std::sqrt(variance) * normal.matrix(X.rows(), X.cols());
}

/// Corrupts only the listed columns, in the order given.
inline Matrix add_gaussian_noise(const Matrix& X, double variance, std::uint64_t seed,
                                 std::span<const int> columns) {
    require(variance >= 0.0, "noise variance must be nonnegative");
    Matrix out = X;
    NormalSource normal(seed);
    const double sd = std::sqrt(variance);
    for (int c : columns) {
        require(c >= 0 && c < X.cols(), "column index " + std::to_string(c) + " out of range");
        for (Eigen::Index i = 0; i < X.rows(); ++i) out(i, c) += sd * normal();
    }
    return out;
}

}  // namespace rbdlr
