#include "gcnlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <thread>

#include "gcnlab/csv.hpp"
#include "gcnlab/spectral.hpp"

namespace gcnlab {

namespace {

ModelSpec sized_spec(ModelSpec spec, const Dataset& data) {
    spec.in_dim = data.feature_dim();
    spec.out_dim = data.num_classes;
    return spec;
}

int activation_count(const ModelSpec& spec) {
    return spec.family == ModelFamily::Sgc ? 1 : spec.depth;
}

std::vector<std::string> epochs_header(int layers) {
    std::vector<std::string> h = {"epoch",     "loss_l0", "loss_lreg",
                                  "acc_train", "acc_val", "acc_test"};
    for (int l = 1; l <= layers; ++l) h.push_back("smooth_feat_L" + std::to_string(l));
    for (int l = 1; l <= layers; ++l) h.push_back("smooth_node_L" + std::to_string(l));
    h.push_back("ms");
    return h;
}

std::vector<std::string> epochs_row(const EpochRecord& r, int layers) {
    std::vector<std::string> row = {std::to_string(r.epoch), csv_float(r.loss_l0),
                                    csv_float(r.loss_lreg), csv_float(r.acc_train),
                                    r.acc_val < 0 ? "" : csv_float(r.acc_val),
                                    r.acc_test < 0 ? "" : csv_float(r.acc_test)};
    for (int l = 0; l < layers; ++l) {
        row.push_back(l < static_cast<int>(r.smooth_feat.size()) ? csv_float(r.smooth_feat[l])
                                                                 : "");
    }
    for (int l = 0; l < layers; ++l) {
        row.push_back(l < static_cast<int>(r.smooth_node.size()) ? csv_float(r.smooth_node[l])
                                                                 : "");
    }
    row.push_back(csv_float(r.ms));
    return row;
}

void write_epochs_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& records,
                      int layers, int every = 1) {
    std::vector<std::vector<std::string>> rows;
    for (size_t i = 0; i < records.size(); ++i) {
        if (every > 1 && records[i].epoch % every != 0 && i + 1 != records.size()) continue;
        rows.push_back(epochs_row(records[i], layers));
    }
    write_csv(path, epochs_header(layers), rows);
}

void write_summary_csv(const std::filesystem::path& path, const EpochRecord& final_rec,
                       const std::vector<EpochRecord>& records, bool has_val) {
    const std::vector<std::string> header = {"which",     "epoch",   "loss_l0",  "loss_lreg",
                                             "acc_train", "acc_val", "acc_test"};
    auto to_row = [](const std::string& which, const EpochRecord& r) {
        return std::vector<std::string>{which,
                                        std::to_string(r.epoch),
                                        csv_float(r.loss_l0),
                                        csv_float(r.loss_lreg),
                                        csv_float(r.acc_train),
                                        r.acc_val < 0 ? "" : csv_float(r.acc_val),
                                        r.acc_test < 0 ? "" : csv_float(r.acc_test)};
    };
    std::vector<std::vector<std::string>> rows;
    rows.push_back(to_row("final", final_rec));
    if (has_val && !records.empty()) {
        const EpochRecord* best = &records.front();
        for (const auto& r : records) {
            if (r.acc_val > best->acc_val) best = &r;
        }
        rows.push_back(to_row("best_val", *best));
    }
    write_csv(path, header, rows);
}

bool has_any(const std::vector<bool>& m) {
    for (bool b : m)
        if (b) return true;
    return false;
}

// deterministic parallel-for: results land in caller-indexed slots
void parallel_runs(int count, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&, t] {
            try {
                int i;
                while ((i = next.fetch_add(1)) < count) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
}

int run_guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

Dataset load_dataset(const std::string& name) {
    if (name == "karate") return load_karate();
    return load_bundle(name);
}

EpochRecord diagnose(const Dataset& data, const ModelSpec& spec, ModelParams& params,
                     int epoch_index, bool with_scores, std::uint64_t score_seed) {
    const ConvOperator op = spec.op_kind == OperatorKind::Eta
                                ? make_operator(data.graph, spec.op_kind, spec.eta_weight)
                                : make_operator(data.graph, spec.op_kind);
    const bool isolated = std::any_of(data.graph.degree.begin(), data.graph.degree.end(),
                                      [](int d) { return d == 0; });
    std::optional<ConvOperator> lap;
    if (!isolated) lap = make_operator(data.graph, OperatorKind::Laplacian);

    EpochRecord rec;
    rec.epoch = epoch_index;
    Tape tape;
    auto fwd = forward(spec, params, tape, data.features, op, {});
    // no pushes after this point: value() references the tape's nodes
    rec.loss_l0 =
        tape.value(masked_cross_entropy(tape, fwd.logits, data.labels, data.train_mask)).item();
    const Tensor& logits = tape.value(fwd.logits);
    rec.loss_lreg = lap ? dirichlet_energy(logits, *lap) : std::numeric_limits<double>::quiet_NaN();

    auto masked_acc = [&](const std::vector<bool>& mask) {
        int total = 0, correct = 0;
        for (int i = 0; i < logits.rows(); ++i) {
            if (!mask[i]) continue;
            int pred = 0;
            for (int j = 1; j < logits.cols(); ++j)
                if (logits(i, j) > logits(i, pred)) pred = j;
            ++total;
            correct += (pred == data.labels[i]);
        }
        return total ? double(correct) / total : -1.0;
    };
    rec.acc_train = masked_acc(data.train_mask);
    rec.acc_val = has_any(data.val_mask) ? masked_acc(data.val_mask) : -1.0;
    rec.acc_test = has_any(data.test_mask) ? masked_acc(data.test_mask) : -1.0;
    if (with_scores) {
        for (const VarId a : fwd.activations) {
            auto [f, n] = smoothing_scores(tape.value(a), 1000, score_seed);
            rec.smooth_feat.push_back(f);
            rec.smooth_node.push_back(n);
        }
    }
    return rec;
}

int cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    return run_guarded([&] {
        const Dataset data = load_dataset(cfg.dataset());
        const ModelSpec spec = sized_spec(cfg.model_spec(), data);
        const TrainConfig tc = cfg.train_config();
        TrainResult result = train(data, spec, tc);
        const EpochRecord final_rec =
            diagnose(data, spec, result.params, tc.epochs, true, tc.seed);
        const int layers = activation_count(spec);
        write_epochs_csv(out / "epochs.csv", result.records, layers);
        write_summary_csv(out / "summary.csv", final_rec, result.records, has_any(data.val_mask));
    });
}

int cmd_sweep_depth(const ExperimentConfig& cfg, const std::filesystem::path& out, int jobs) {
    return run_guarded([&] {
        const Dataset data = load_dataset(cfg.dataset());
        const auto families = cfg.get_names("families");
        const auto depth_list = cfg.get_list("depths");
        const int seeds = cfg.seeds();
        const int log_every = cfg.log_every();
        const std::uint64_t base_seed = static_cast<std::uint64_t>(cfg.get_int("seed"));

        struct Run {
            std::string family;
            int depth;
            int seed_index;
        };
        std::vector<Run> runs;
        for (const auto& fam : families)
            for (double d : depth_list)
                for (int s = 0; s < seeds; ++s)
                    runs.push_back({fam, static_cast<int>(d), s});

        struct Outcome {
            double train_acc = 0.0, test_acc = 0.0;
        };
        std::vector<Outcome> outcomes(runs.size());

        parallel_runs(static_cast<int>(runs.size()), jobs, [&](int i) {
            const Run& r = runs[i];
            ExperimentConfig c = cfg;
            c.set("family", r.family);
            c.set("depth", std::to_string(r.depth));
            if (r.family != "dnn") c.set("gamma", "0");
            else if (cfg.get_double("gamma") == 0.0) c.set("gamma", "1");
            ModelSpec spec = sized_spec(c.model_spec(), data);
            TrainConfig tc = c.train_config();
            spec.seed = tc.seed = base_seed + static_cast<std::uint64_t>(r.seed_index);
            TrainResult res = train(data, spec, tc);
            EpochRecord final_rec = diagnose(data, spec, res.params, tc.epochs, false, tc.seed);
            outcomes[i].train_acc = final_rec.acc_train;
            outcomes[i].test_acc = final_rec.acc_test;
            if (log_every > 0) {
                write_epochs_csv(out / (r.family + "_d" + std::to_string(r.depth) + "_s" +
                                        std::to_string(r.seed_index)) /
                                     "epochs.csv",
                                 res.records, activation_count(spec), log_every);
            }
        });

        std::vector<std::vector<std::string>> rows;
        size_t idx = 0;
        for (const auto& fam : families) {
            for (double d : depth_list) {
                std::vector<double> tr, te;
                for (int s = 0; s < seeds; ++s, ++idx) {
                    tr.push_back(outcomes[idx].train_acc);
                    te.push_back(outcomes[idx].test_acc);
                }
                rows.push_back({fam, std::to_string(static_cast<int>(d)), csv_float(mean(tr)),
                                csv_float(stddev(tr)), csv_float(mean(te)), csv_float(stddev(te)),
                                std::to_string(seeds)});
            }
        }
        write_csv(out / "depth_sweep.csv",
                  {"family", "depth", "train_acc_mean", "train_acc_std", "test_acc_mean",
                   "test_acc_std", "seeds"},
                  rows);
    });
}

int cmd_sweep_eta(const ExperimentConfig& cfg, const std::filesystem::path& out, int jobs) {
    return run_guarded([&] {
        const Dataset data = load_dataset(cfg.dataset());
        const auto weights = cfg.get_list("weights");
        const auto depth_list = cfg.get_list("eta_depths");
        const int seeds = cfg.seeds();
        const std::uint64_t base_seed = static_cast<std::uint64_t>(cfg.get_int("seed"));

        struct Run {
            int depth;
            double w;
            int seed_index;
        };
        std::vector<Run> runs;
        for (double d : depth_list)
            for (double w : weights)
                for (int s = 0; s < seeds; ++s) runs.push_back({static_cast<int>(d), w, s});

        struct Outcome {
            double train_acc = 0.0, test_acc = 0.0;
        };
        std::vector<Outcome> outcomes(runs.size());

        parallel_runs(static_cast<int>(runs.size()), jobs, [&](int i) {
            const Run& r = runs[i];
            ExperimentConfig c = cfg;
            c.set("family", "gcn");
            c.set("operator", "eta");
            c.set("eta_w", csv_float(r.w));
            c.set("depth", std::to_string(r.depth));
            ModelSpec spec = sized_spec(c.model_spec(), data);
            TrainConfig tc = c.train_config();
            spec.seed = tc.seed = base_seed + static_cast<std::uint64_t>(r.seed_index);
            TrainResult res = train(data, spec, tc);
            EpochRecord final_rec = diagnose(data, spec, res.params, tc.epochs, false, tc.seed);
            outcomes[i].train_acc = final_rec.acc_train;
            outcomes[i].test_acc = final_rec.acc_test;
        });

        std::vector<std::string> header = {"depth", "metric"};
        for (double w : weights) header.push_back("w=" + csv_float(w));
        std::vector<std::vector<std::string>> rows;
        size_t idx = 0;
        for (double d : depth_list) {
            std::vector<std::string> train_row = {std::to_string(static_cast<int>(d)), "train"};
            std::vector<std::string> test_row = {std::to_string(static_cast<int>(d)), "test"};
            for (size_t wi = 0; wi < weights.size(); ++wi) {
                std::vector<double> tr, te;
                for (int s = 0; s < seeds; ++s, ++idx) {
                    tr.push_back(outcomes[idx].train_acc);
                    te.push_back(outcomes[idx].test_acc);
                }
                train_row.push_back(csv_float(mean(tr)));
                test_row.push_back(csv_float(mean(te)));
            }
            rows.push_back(train_row);
            rows.push_back(test_row);
        }
        write_csv(out / "eta_sweep.csv", header, rows);
    });
}

int cmd_tricks(const ExperimentConfig& cfg, const std::filesystem::path& out, int jobs) {
    return run_guarded([&] {
        const Dataset data = load_dataset(cfg.dataset());
        const std::vector<std::pair<std::string, std::string>> tricks = {
            {"vanilla", "none"},
            {"mean_sub", "mean_sub"},
            {"pair_norm", "pair_norm"},
            {"batch_norm", "batch_norm"},
        };
        const int seeds = cfg.seeds();
        const int log_every = cfg.log_every();
        const std::uint64_t base_seed = static_cast<std::uint64_t>(cfg.get_int("seed"));

        struct Run {
            int trick_index;
            int seed_index;
        };
        std::vector<Run> runs;
        for (int t = 0; t < 4; ++t)
            for (int s = 0; s < seeds; ++s) runs.push_back({t, s});

        struct Outcome {
            double train_last50 = 0.0, test_last50 = 0.0, total_ms = 0.0;
        };
        std::vector<Outcome> outcomes(runs.size());

        parallel_runs(static_cast<int>(runs.size()), jobs, [&](int i) {
            const Run& r = runs[i];
            ExperimentConfig c = cfg;
            c.set("family", "gcn");
            c.set("trick", tricks[r.trick_index].second);
            ModelSpec spec = sized_spec(c.model_spec(), data);
            TrainConfig tc = c.train_config();
            spec.seed = tc.seed = base_seed + static_cast<std::uint64_t>(r.seed_index);
            TrainResult res = train(data, spec, tc);
            const int window = std::min<int>(50, static_cast<int>(res.records.size()));
            double tr = 0.0, te = 0.0, ms = 0.0;
            for (const auto& rec : res.records) ms += rec.ms;
            for (int k = 0; k < window; ++k) {
                const auto& rec = res.records[res.records.size() - 1 - k];
                tr += rec.acc_train;
                te += rec.acc_test;
            }
            outcomes[i] = {window ? tr / window : 0.0, window ? te / window : 0.0, ms};
            if (log_every > 0 && r.seed_index == 0) {
                write_epochs_csv(out / tricks[r.trick_index].first / "epochs.csv", res.records,
                                 activation_count(spec), log_every);
            }
        });

        std::vector<std::vector<std::string>> rows;
        size_t idx = 0;
        for (int t = 0; t < 4; ++t) {
            std::vector<double> tr, te, ms;
            for (int s = 0; s < seeds; ++s, ++idx) {
                tr.push_back(outcomes[idx].train_last50);
                te.push_back(outcomes[idx].test_last50);
                ms.push_back(outcomes[idx].total_ms);
            }
            rows.push_back({tricks[t].first, csv_float(mean(tr)), csv_float(mean(te)),
                            csv_float(mean(ms))});
        }
        write_csv(out / "tricks_summary.csv",
                  {"trick", "acc_train_last50", "acc_test_last50", "total_ms"}, rows);
    });
}

int cmd_karate_demo(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    return run_guarded([&] {
        ExperimentConfig c = cfg;
        c.set("dataset", "karate");
        const Dataset data = load_dataset("karate");
        const ModelSpec spec = sized_spec(c.model_spec(), data);
        const TrainConfig tc = c.train_config();

        TrainResult result = train(data, spec, tc);
        const EpochRecord final_rec =
            diagnose(data, spec, result.params, tc.epochs, true, tc.seed);
        write_epochs_csv(out / "epochs.csv", result.records, activation_count(spec));
        write_summary_csv(out / "summary.csv", final_rec, result.records, false);

        // repeated random-walk smoothing of random 2-d features, with and
        // without the mean-subtraction trick, snapshotted at fixed depths
        const ConvOperator arw = make_operator(data.graph, OperatorKind::RwRenorm);
        std::mt19937_64 rng(tc.seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Tensor x0(data.n(), 2);
        for (auto& v : x0.data()) v = gauss(rng);

        const std::vector<int> snapshots = {0, 5, 20, 100};
        for (const bool mean_sub : {false, true}) {
            Tensor x = x0;
            int k = 0;
            for (int target : snapshots) {
                for (; k < target; ++k) {
                    x = spmm(arw, x);
                    if (mean_sub) {
                        x = apply_trick(x, Trick::MeanSub, OperatorKind::RwRenorm,
                                        arw.degrees_with_loops);
                    }
                }
                // scale each dimension by its largest absolute value
                Tensor scaled = x;
                for (int j = 0; j < 2; ++j) {
                    double mx = 0.0;
                    for (int i = 0; i < data.n(); ++i) mx = std::max(mx, std::abs(scaled(i, j)));
                    if (mx > 0.0)
                        for (int i = 0; i < data.n(); ++i) scaled(i, j) /= mx;
                }
                std::vector<std::vector<std::string>> rows;
                for (int i = 0; i < data.n(); ++i) {
                    rows.push_back({std::to_string(i), csv_float(scaled(i, 0)),
                                    csv_float(scaled(i, 1))});
                }
                write_csv(out / ("karate_smoothing_k" + std::to_string(target) +
                                 (mean_sub ? "_meansub.csv" : "_plain.csv")),
                          {"node", "x", "y"}, rows);
            }
        }
    });
}

}  // namespace gcnlab
