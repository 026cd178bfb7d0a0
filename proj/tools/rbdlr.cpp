#include <cstdint>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

void add_hyperparams(CLI::App* cmd, rbdlr::cli::RunConfig& c, std::string& mode) {
    auto& hp = c.hp;
    cmd->add_option("--alpha", hp.alpha, "weight of the coefficient/weight coupling")->capture_default_str();
    cmd->add_option("--beta", hp.beta, "weight of the block-diagonal and locality terms")->capture_default_str();
    cmd->add_option("--gamma", hp.gamma, "weight of the L2,1 error term")->capture_default_str();
    cmd->add_option("--k", hp.k, "number of blocks (default: distinct labels)");
    cmd->add_option("--mu0", hp.mu0, "initial penalty")->capture_default_str();
    cmd->add_option("--mu-max", hp.mu_max, "penalty cap")->capture_default_str();
    cmd->add_option("--eta", hp.eta, "penalty growth factor")->capture_default_str();
    cmd->add_option("--eps", hp.eps, "stopping tolerance on the residuals")->capture_default_str();
    cmd->add_option("--max-iter", hp.max_iter, "iteration limit")->capture_default_str();
    cmd->add_option("--mode", mode, "rbdlr or fllrr (fllrr forces alpha = beta = 0)")
        ->check(CLI::IsMember({"rbdlr", "fllrr"}))
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust block-diagonal low-rank representation toolkit"};
    app.require_subcommand(1);

    rbdlr::cli::RunConfig c;
    std::string mode = "rbdlr";
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--threads", c.threads, "matrix kernel threads; 1 is bitwise deterministic")
            ->capture_default_str();
    };

    auto* synth = app.add_subcommand("synth", "generate the rotated-subspace benchmark (X.csv, labels.txt)");
    synth->add_option("--subspaces", c.synth.num_subspaces)->capture_default_str();
    synth->add_option("--ambient-dim", c.synth.ambient_dim)->capture_default_str();
    synth->add_option("--basis-dim", c.synth.basis_dim)->capture_default_str();
    synth->add_option("--samples", c.synth.samples_per_subspace, "samples per subspace")->capture_default_str();
    synth->add_option("--seed", c.synth.seed)->capture_default_str();
    synth->add_option("-o,--output", c.output, "output directory")->required();
    add_common(synth);

    auto* noise = app.add_subcommand("noise", "add i.i.d. Gaussian noise to a matrix");
    noise->add_option("input", c.input, "matrix CSV")->required();
    noise->add_option("--variance", c.variance)->required();
    noise->add_option("--columns", c.columns, "only corrupt these columns")->delimiter(',');
    auto* noise_seed = noise->add_option("--seed", seed);
    noise->add_option("-o,--output", c.output, "output CSV")->required();
    add_common(noise);

    auto* fit = app.add_subcommand("fit", "fit the model; writes Z, P, E, W, theta CSVs and report.json");
    fit->add_option("input", c.input, "data matrix CSV, columns are samples")->required();
    fit->add_option("--labels", c.labels, "labels file (sets the default k)");
    add_hyperparams(fit, c, mode);
    auto* fit_seed = fit->add_option("--seed", seed, "recorded in report.json");
    fit->add_option("-o,--output", c.output, "model directory")->required();
    add_common(fit);

    auto* features = app.add_subcommand("features", "salient features P X");
    features->add_option("model", c.model, "model directory")->required();
    features->add_option("input", c.input, "data matrix CSV")->required();
    features->add_option("-o,--output", c.output, "output CSV")->required();
    add_common(features);

    auto* classify = app.add_subcommand("classify", "1-NN classification on salient features");
    classify->add_option("model", c.model, "model directory")->required();
    classify->add_option("--train", c.train)->required();
    classify->add_option("--train-labels", c.train_labels)->required();
    classify->add_option("--test", c.test)->required();
    classify->add_option("--test-labels", c.test_labels, "prints accuracy when given");
    classify->add_option("-o,--output", c.output, "predicted labels file")->required();
    add_common(classify);

    auto* cluster = app.add_subcommand("cluster", "cosine K-means on recovered data");
    cluster->add_option("model", c.model, "model directory")->required();
    cluster->add_option("input", c.input, "the data matrix the model was fitted on")->required();
    cluster->add_option("--k", c.clusters, "number of clusters")->required();
    cluster->add_option("--source", c.source, "uz (principal features), x, u or pu")
        ->check(CLI::IsMember({"uz", "x", "u", "pu"}))
        ->capture_default_str();
    cluster->add_option("--restarts", c.restarts)->capture_default_str();
    auto* cluster_seed = cluster->add_option("--seed", seed);
    cluster->add_option("--labels", c.labels, "ground truth; adds accuracy and F-score to the report");
    cluster->add_option("-o,--output", c.output, "output directory")->required();
    add_common(cluster);

    CLI11_PARSE(app, argc, argv);

    c.command = app.get_subcommands().front()->get_name();
    c.hp.mode = mode == "fllrr" ? rbdlr::Mode::FLLRR : rbdlr::Mode::RBDLR;
    for (auto* opt : {noise_seed, fit_seed, cluster_seed})
        if (opt->count() > 0) c.seed = seed;
    if (c.command == "synth") c.seed = c.synth.seed;
    return rbdlr::cli::run(c);
}
