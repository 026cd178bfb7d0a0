#pragma once

// Command implementations behind the rbdlr executable. Kept in a header so
// the test suite can drive them in-process.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rbdlr/io.hpp"
#include "rbdlr/rbdlr.hpp"

namespace rbdlr::cli {

namespace fs = std::filesystem;

enum class ClusterSource { UZ, X, U, PU };

inline ClusterSource parse_source(const std::string& s) {
    if (s == "uz") return ClusterSource::UZ;
    if (s == "x") return ClusterSource::X;
    if (s == "u") return ClusterSource::U;
    if (s == "pu") return ClusterSource::PU;
    throw InvalidInput("unknown clustering source '" + s + "' (expected uz, x, u or pu)");
}

struct RunConfig {
    std::string command;
    fs::path input;        // data matrix (fit, noise, features, cluster)
    fs::path model;        // model directory (features, classify, cluster)
    fs::path output;       // file or directory, per command
    fs::path labels;       // fit: used for default k; cluster: truth for metrics
    fs::path train, train_labels, test, test_labels;
    Hyperparams hp;
    std::optional<std::uint64_t> seed;
    SyntheticSpec synth;
    double variance = 0.0;
    std::vector<int> columns;
    int clusters = 0;
    int restarts = 30;
    std::string source = "uz";
    int threads = 1;
};

namespace detail {

inline Matrix clustering_input(const io::Model& model, const Matrix& X, ClusterSource source) {
    if (source == ClusterSource::X) return X;
    require(X.rows() == model.E.rows() && X.cols() == model.E.cols(),
            "data " + shape_of(X) + " does not match the fitted model " + shape_of(model.E));
    const Matrix U = X - model.E;
    switch (source) {
        case ClusterSource::U: return U;
        case ClusterSource::PU: return model.P * U;
        default: return U * model.Z;
    }
}

inline int synth(const RunConfig& c) {
    const Dataset d = generate_subspace_data(c.synth);
    fs::create_directories(c.output);
    io::write_matrix(c.output / "X.csv", d.X);
    io::write_labels(c.output / "labels.txt", *d.labels);
    return 0;
}

inline int noise(const RunConfig& c) {
    const Matrix X = io::read_matrix(c.input);
    const std::uint64_t seed = c.seed.value_or(0);
    const Matrix noisy = c.columns.empty() ? add_gaussian_noise(X, c.variance, seed)
                                           : add_gaussian_noise(X, c.variance, seed, c.columns);
    io::write_matrix(c.output, noisy);
    return 0;
}

inline int fit(const RunConfig& c) {
    Dataset d{io::read_matrix(c.input), std::nullopt};
    if (!c.labels.empty()) d.labels = io::read_labels(c.labels);
    Hyperparams hp = c.hp;
    if (hp.mode == Mode::FLLRR) hp.alpha = hp.beta = 0.0;
    hp = resolve_block_count(hp, d);
    hp.validate(d.samples());
    const FitResult result = rbdlr::fit(d, hp);
    io::save_model(c.output, result, io::report_json(result.report, hp, c.seed));
    std::cout << "fit: " << result.report.iterations << " iterations, "
              << (result.report.converged ? "converged" : "not converged") << "\n";
    return 0;
}

inline int features(const RunConfig& c) {
    const io::Model model = io::load_model(c.model);
    io::write_matrix(c.output, salient_features(model.P, io::read_matrix(c.input)));
    return 0;
}

inline int classify(const RunConfig& c) {
    const io::Model model = io::load_model(c.model);
    const Matrix train = salient_features(model.P, io::read_matrix(c.train));
    const Matrix test = salient_features(model.P, io::read_matrix(c.test));
    const Labels predicted = knn1_classify(train, io::read_labels(c.train_labels), test);
    io::write_labels(c.output, predicted);
    if (!c.test_labels.empty()) {
        const Labels truth = io::read_labels(c.test_labels);
        require(truth.size() == predicted.size(), "test label count does not match test samples");
        std::size_t hits = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i];
        std::cout << "accuracy: " << io::format_number(static_cast<double>(hits) / truth.size()) << "\n";
    }
    return 0;
}

inline int cluster(const RunConfig& c) {
    const io::Model model = io::load_model(c.model);
    const Matrix X = io::read_matrix(c.input);
    const Matrix feats = clustering_input(model, X, parse_source(c.source));
    const std::uint64_t seed = c.seed.value_or(0);
    const KMeansResult km = kmeans_cosine_detailed(feats, c.clusters, c.restarts, seed);

    fs::create_directories(c.output);
    io::write_labels(c.output / "assignments.txt", km.assignments);
    io::json report{{"k", c.clusters}, {"restarts", c.restarts}, {"seed", seed},
                    {"source", c.source}, {"cost", km.cost}, {"best_restart", km.restart}};
    if (!c.labels.empty()) {
        const Labels truth = io::read_labels(c.labels);
        report["accuracy"] = clustering_accuracy(km.assignments, truth);
        report["f_score"] = pairwise_f_score(km.assignments, truth);
    }
    io::write_json(c.output / "cluster_report.json", report);
    return 0;
}

}  // namespace detail

/// Executes one command. Returns the process exit status; every failure is
/// reported as a single line on err.
inline int run(const RunConfig& c, std::ostream& err = std::cerr) {
    try {
        require(c.threads >= 1, "--threads must be at least 1");
        Eigen::setNbThreads(c.threads);
        if (c.command == "synth") return detail::synth(c);
        if (c.command == "noise") return detail::noise(c);
        if (c.command == "fit") return detail::fit(c);
        if (c.command == "features") return detail::features(c);
        if (c.command == "classify") return detail::classify(c);
        if (c.command == "cluster") return detail::cluster(c);
        throw InvalidInput("unknown command '" + c.command + "'");
    } catch (const io::ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const io::FileError& e) {
        err << "file error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidInput& e) {
        err << "invalid input: " << e.what() << "\n";
        return 3;
    } catch (const SolverDivergence& e) {
        err << "solver divergence: " << e.what() << "\n";
        return 4;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const UndefinedRatio& e) {
        err << "undefined: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace rbdlr::cli
