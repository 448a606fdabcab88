#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gcnlab/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"gcnlab - graph convolution as two-step graph-regularized optimization"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    int seeds = -1;
    int log_every = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file")->required();
        cmd->add_option("--out", out_dir, "output directory (default: config 'out')");
        cmd->add_option("--jobs", jobs, "concurrent training runs (sweeps only)");
        cmd->add_option("--seeds", seeds, "runs per configuration (sweeps only)");
        cmd->add_option("--log-every", log_every, "per-epoch csv cadence (0 = summary only)");
    };

    auto* train_cmd = app.add_subcommand("train", "train one model, write epochs.csv + summary.csv");
    add_common(train_cmd);
    auto* depth_cmd = app.add_subcommand("sweep-depth", "model families across depths");
    add_common(depth_cmd);
    auto* eta_cmd = app.add_subcommand("sweep-eta", "eta-GCN across aggregation weights");
    add_common(eta_cmd);
    auto* tricks_cmd = app.add_subcommand("tricks", "layerwise normalization tricks side by side");
    add_common(tricks_cmd);
    auto* karate_cmd = app.add_subcommand("karate-demo", "anti-oversmoothing demo on the karate club");
    add_common(karate_cmd);

    CLI11_PARSE(app, argc, argv);

    gcnlab::ExperimentConfig cfg;
    try {
        cfg = gcnlab::ExperimentConfig::parse_file(config_path);
        if (seeds >= 0) cfg.set("seeds", std::to_string(seeds));
        if (log_every >= 0) cfg.set("log_every", std::to_string(log_every));
        if (!out_dir.empty()) cfg.set("out", out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    const std::filesystem::path out = cfg.out_dir();

    if (train_cmd->parsed()) return gcnlab::cmd_train(cfg, out);
    if (depth_cmd->parsed()) return gcnlab::cmd_sweep_depth(cfg, out, jobs);
    if (eta_cmd->parsed()) return gcnlab::cmd_sweep_eta(cfg, out, jobs);
    if (tricks_cmd->parsed()) return gcnlab::cmd_tricks(cfg, out, jobs);
    if (karate_cmd->parsed()) return gcnlab::cmd_karate_demo(cfg, out);
    return 2;
}
