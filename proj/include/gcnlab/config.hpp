#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gcnlab/model.hpp"
#include "gcnlab/train.hpp"

namespace gcnlab {

// Flat `key = value` experiment configuration. '#' starts a comment,
// blank lines are skipped, unknown keys are rejected. Every key has a
// documented default (see default_config_text()).
class ExperimentConfig {
public:
    ExperimentConfig();  // defaults only
    static ExperimentConfig parse_file(const std::filesystem::path& path);
    static ExperimentConfig parse_text(const std::string& text);

    std::string get(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_flag(const std::string& key) const;  // on/off/true/false/1/0
    std::vector<double> get_list(const std::string& key) const;    // comma separated
    std::vector<std::string> get_names(const std::string& key) const;

    void set(const std::string& key, const std::string& value);

    // Assembled views over the flat keys.
    ModelSpec model_spec() const;    // seed comes from `seed`
    TrainConfig train_config() const;
    std::string dataset() const { return get("dataset"); }
    std::filesystem::path out_dir() const { return get("out"); }
    int log_every() const { return get_int("log_every"); }
    int seeds() const { return get_int("seeds"); }

    static std::string default_config_text();  // all keys with defaults, commented

private:
    std::map<std::string, std::string> values_;
};

}  // namespace gcnlab
