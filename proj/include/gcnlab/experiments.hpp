#pragma once

#include <filesystem>
#include <string>

#include "gcnlab/config.hpp"
#include "gcnlab/data.hpp"
#include "gcnlab/train.hpp"

namespace gcnlab {

// "karate" or a graph-bundle directory.
Dataset load_dataset(const std::string& name);

// Model/epoch diagnostics for the current parameter state: losses,
// accuracies and per-layer smoothing scores, tagged with `epoch_index`.
EpochRecord diagnose(const Dataset& data, const ModelSpec& spec, ModelParams& params,
                     int epoch_index, bool with_scores, std::uint64_t score_seed = 0);

// Experiment commands behind the CLI. Each returns a process exit code:
// 0 success, 1 training divergence, 2 configuration or data error. Output
// CSVs are written atomically; a failing command leaves no partial files.
int cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out);
int cmd_sweep_depth(const ExperimentConfig& cfg, const std::filesystem::path& out, int jobs);
int cmd_sweep_eta(const ExperimentConfig& cfg, const std::filesystem::path& out, int jobs);
int cmd_tricks(const ExperimentConfig& cfg, const std::filesystem::path& out, int jobs);
int cmd_karate_demo(const ExperimentConfig& cfg, const std::filesystem::path& out);

}  // namespace gcnlab
