#pragma once

// Downstream evaluation: salient-feature extraction, 1-NN classification,
// cosine K-means and the clustering metrics.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "rbdlr/types.hpp"

namespace rbdlr {

/// P X.
inline Matrix salient_features(const Matrix& P, const Matrix& X) {
    require(P.cols() == X.rows(), "projection " + shape_of(P) + " does not match data " + shape_of(X));
    return P * X;
}

/// Euclidean 1-NN; ties go to the lowest training index.
inline Labels knn1_classify(const Matrix& train, const Labels& train_labels, const Matrix& test) {
    require(train.cols() >= 1, "training set is empty");
    require(static_cast<Eigen::Index>(train_labels.size()) == train.cols(),
            "training label count does not match training samples");
    require(train.rows() == test.rows(), "feature dimensions differ: " + std::to_string(train.rows()) +
                                             " vs " + std::to_string(test.rows()));
    Labels out(static_cast<std::size_t>(test.cols()));
    for (Eigen::Index j = 0; j < test.cols(); ++j) {
        Eigen::Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < train.cols(); ++i) {
            const double d = (train.col(i) - test.col(j)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        out[static_cast<std::size_t>(j)] = train_labels[static_cast<std::size_t>(best)];
    }
    return out;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Relabels to 0..K-1 in order of first sorted value.
inline std::vector<int> compact(const Labels& labels, int& count) {
    std::map<int, int> index;
    for (int l : labels) index.emplace(l, 0);
    int next = 0;
    for (auto& [label, id] : index) id = next++;
    count = next;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) out.push_back(index[l]);
    return out;
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// method with potentials, O(n^3)). Returns row -> column.
inline std::vector<int> hungarian(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n);
    for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace detail

/// Best agreement over one-to-one matchings of predicted clusters to classes.
inline double clustering_accuracy(const Labels& pred, const Labels& truth) {
    require(pred.size() == truth.size(), "prediction and truth lengths differ");
    require(!pred.empty(), "label vectors are empty");
    int kp = 0, kt = 0;
    const auto p = detail::compact(pred, kp);
    const auto t = detail::compact(truth, kt);
    const int k = std::max(kp, kt);
    Matrix counts = Matrix::Zero(k, k);
    for (std::size_t i = 0; i < p.size(); ++i) counts(p[i], t[i]) += 1.0;
    const auto match = detail::hungarian(-counts);
    double agree = 0.0;
    for (int r = 0; r < k; ++r) agree += counts(r, match[static_cast<std::size_t>(r)]);
    return agree / static_cast<double>(pred.size());
}

/// Pairwise F1: a pair is a positive when both samples share a cluster.
inline double pairwise_f_score(const Labels& pred, const Labels& truth) {
    require(pred.size() == truth.size(), "prediction and truth lengths differ");
    require(pred.size() >= 2, "pairwise F-score needs at least two samples");
    int kp = 0, kt = 0;
    const auto p = detail::compact(pred, kp);
    const auto t = detail::compact(truth, kt);
    Matrix counts = Matrix::Zero(kp, kt);
    for (std::size_t i = 0; i < p.size(); ++i) counts(p[i], t[i]) += 1.0;
    const auto pairs = [](double c) { return c * (c - 1.0) / 2.0; };
    const double both = counts.unaryExpr(pairs).sum();
    const double same_cluster = counts.rowwise().sum().unaryExpr(pairs).sum();
    const double same_class = counts.colwise().sum().unaryExpr(pairs).sum();
    const double precision = same_cluster > 0.0 ? both / same_cluster : 0.0;
    const double recall = same_class > 0.0 ? both / same_class : 0.0;
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

/// Fraction of |W| mass on same-label pairs.
inline double block_energy_ratio(const Matrix& W, const Labels& labels) {
    require(W.rows() == W.cols(), "W must be square");
    require(static_cast<Eigen::Index>(labels.size()) == W.rows(), "label count does not match W");
    double within = 0.0, total = 0.0;
    for (Eigen::Index j = 0; j < W.cols(); ++j)
        for (Eigen::Index i = 0; i < W.rows(); ++i) {
            const double w = std::abs(W(i, j));
            total += w;
            if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) within += w;
        }
    if (!(total > 0.0)) throw UndefinedRatio("block energy ratio is undefined for a zero weight matrix");
    return within / total;
}

struct KMeansResult {
    Labels assignments;
    double cost = 0.0;                // sum over samples of 1 - cos(x, centroid)
    std::vector<double> cost_history; // of the winning restart, one entry per assignment step
    int restart = 0;
};

namespace detail {

inline KMeansResult spherical_lloyd(const Matrix& unit, const std::vector<char>& nonzero, int K,
                                    std::uint64_t seed, int max_iter) {
    const auto d = unit.rows();
    const auto N = unit.cols();
    std::mt19937_64 engine(seed);

    // K distinct starting samples, preferring nonzero ones.
    std::vector<Eigen::Index> order;
    for (Eigen::Index i = 0; i < N; ++i)
        if (nonzero[static_cast<std::size_t>(i)]) order.push_back(i);
    for (Eigen::Index i = 0; i < N; ++i)
        if (!nonzero[static_cast<std::size_t>(i)]) order.push_back(i);
    const auto usable = static_cast<std::size_t>(std::count(nonzero.begin(), nonzero.end(), 1));
    const std::size_t pool = std::max<std::size_t>(usable, static_cast<std::size_t>(K));
    for (std::size_t i = 0; i < static_cast<std::size_t>(K); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(engine() % (pool - i));
        std::swap(order[i], order[j]);
    }
    Matrix centroids(d, K);
    for (int c = 0; c < K; ++c) centroids.col(c) = unit.col(order[static_cast<std::size_t>(c)]);

    KMeansResult run;
    run.assignments.assign(static_cast<std::size_t>(N), 0);
    Vector best_sim = Vector::Zero(N);
    for (int it = 0; it < max_iter; ++it) {
        Labels next = run.assignments;
        const Matrix sim = centroids.transpose() * unit;  // K x N
        for (Eigen::Index j = 0; j < N; ++j) {
            if (!nonzero[static_cast<std::size_t>(j)]) {
                best_sim(j) = 0.0;
                continue;
            }
            Eigen::Index arg = 0;
            sim.col(j).maxCoeff(&arg);
            next[static_cast<std::size_t>(j)] = static_cast<int>(arg);
            best_sim(j) = sim(arg, j);
        }

        // Re-seed empty clusters with the sample farthest from its centroid.
        std::vector<int> sizes(static_cast<std::size_t>(K), 0);
        for (int a : next) ++sizes[static_cast<std::size_t>(a)];
        for (int c = 0; c < K; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0) continue;
            Eigen::Index far = -1;
            for (Eigen::Index j = 0; j < N; ++j) {
                const auto a = static_cast<std::size_t>(next[static_cast<std::size_t>(j)]);
                if (!nonzero[static_cast<std::size_t>(j)] || sizes[a] < 2) continue;
                if (far < 0 || best_sim(j) < best_sim(far)) far = j;
            }
            if (far < 0) continue;
            --sizes[static_cast<std::size_t>(next[static_cast<std::size_t>(far)])];
            next[static_cast<std::size_t>(far)] = c;
            ++sizes[static_cast<std::size_t>(c)];
            best_sim(far) = 1.0;
            centroids.col(c) = unit.col(far);
        }

        run.cost_history.push_back(static_cast<double>(N) - best_sim.sum());
        const bool stable = it > 0 && next == run.assignments;
        run.assignments = std::move(next);
        if (stable) break;

        Matrix sums = Matrix::Zero(d, K);
        for (Eigen::Index j = 0; j < N; ++j)
            if (nonzero[static_cast<std::size_t>(j)])
                sums.col(run.assignments[static_cast<std::size_t>(j)]) += unit.col(j);
        for (int c = 0; c < K; ++c) {
            const double norm = sums.col(c).norm();
            if (norm > 0.0) centroids.col(c) = sums.col(c) / norm;
        }
    }
    run.cost = run.cost_history.back();
    return run;
}

}  // namespace detail

/// Spherical K-means on the columns of feats. Each restart r draws its
/// initial centroids from a generator seeded with splitmix64(seed + r); the
/// lowest-cost restart wins (earliest on ties).
inline KMeansResult kmeans_cosine_detailed(const Matrix& feats, int K, int restarts, std::uint64_t seed,
                                           int max_iter = 100) {
    require(K >= 1, "K must be positive");
    require(K <= feats.cols(), "K=" + std::to_string(K) + " exceeds the " + std::to_string(feats.cols()) +
                                   " samples");
    require(restarts >= 1, "restarts must be positive");
    require(feats.allFinite(), "features contain non-finite entries");

    Matrix unit = feats;
    std::vector<char> nonzero(static_cast<std::size_t>(feats.cols()), 0);
    for (Eigen::Index j = 0; j < feats.cols(); ++j) {
        const double norm = feats.col(j).norm();
        if (norm > 0.0) {
            unit.col(j) /= norm;
            nonzero[static_cast<std::size_t>(j)] = 1;
        }
    }

    KMeansResult best;
    for (int r = 0; r < restarts; ++r) {
        KMeansResult run = detail::spherical_lloyd(unit, nonzero, K, detail::splitmix64(seed + r), max_iter);
        run.restart = r;
        if (r == 0 || run.cost < best.cost) best = std::move(run);
    }
    return best;
}

inline Labels kmeans_cosine(const Matrix& feats, int K, int restarts, std::uint64_t seed) {
    return kmeans_cosine_detailed(feats, K, restarts, seed).assignments;
}

}  // namespace rbdlr
