#include "gcnlab/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gcnlab {

namespace {

const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> defaults = {
        {"dataset", "karate"},        // "karate" or a graph-bundle directory
        {"family", "gcn"},            // gcn | sgc | mlp | dnn
        {"depth", "2"},
        {"hidden", "16"},
        {"operator", "sym_renorm"},   // sym_renorm | rw_renorm | sym_plain | laplacian | eta
        {"eta_w", "1"},
        {"trick", "none"},            // none | mean_sub | pair_norm | batch_norm
        {"pair_norm_scale", "1"},
        {"skip", "auto"},             // auto (on when depth > 3) | on | off
        {"epochs", "400"},
        {"lr", "0.01"},
        {"weight_decay", "0.0005"},
        {"gamma", "0"},               // weight of the Dirichlet term in the loss
        {"dropout", "0"},
        {"eval_every", "1"},
        {"seed", "0"},
        {"seeds", "5"},               // runs per configuration in sweeps
        {"log_every", "1"},           // per-epoch csv cadence in sweeps, 0 = summary only
        {"depths", "2,4,8,16,32"},    // sweep-depth
        {"families", "gcn,sgc"},      // sweep-depth
        {"weights", "0,0.1,0.2,0.5,1,2,5,10,20,50,100"},  // sweep-eta
        {"eta_depths", "2,32"},       // sweep-eta
        {"out", "runs"},
    };
    return defaults;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

}  // namespace

ExperimentConfig::ExperimentConfig() : values_(default_values()) {}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (default_values().find(key) == default_values().end()) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown key '" + key + "'");
        }
        cfg.values_[key] = value;
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

std::string ExperimentConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
    return it->second;
}

int ExperimentConfig::get_int(const std::string& key) const {
    try {
        size_t pos = 0;
        const int v = std::stoi(get(key), &pos);
        if (pos != get(key).size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected an integer, got '" +
                                    get(key) + "'");
    }
}

double ExperimentConfig::get_double(const std::string& key) const {
    try {
        size_t pos = 0;
        const double v = std::stod(get(key), &pos);
        if (pos != get(key).size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected a number, got '" +
                                    get(key) + "'");
    }
}

bool ExperimentConfig::get_flag(const std::string& key) const {
    const std::string v = get(key);
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw std::invalid_argument("config key '" + key + "': expected on/off, got '" + v + "'");
}

std::vector<double> ExperimentConfig::get_list(const std::string& key) const {
    std::vector<double> out;
    std::istringstream in(get(key));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "': bad number '" + item + "'");
        }
    }
    if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
    return out;
}

std::vector<std::string> ExperimentConfig::get_names(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream in(get(key));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
    return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (default_values().find(key) == default_values().end()) {
        throw std::invalid_argument("unknown config key '" + key + "'");
    }
    values_[key] = value;
}

ModelSpec ExperimentConfig::model_spec() const {
    ModelSpec spec;
    const std::string fam = get("family");
    if (fam == "gcn") spec.family = ModelFamily::Gcn;
    else if (fam == "sgc") spec.family = ModelFamily::Sgc;
    else if (fam == "mlp" || fam == "dnn") spec.family = ModelFamily::Mlp;
    else throw std::invalid_argument("config key 'family': unknown value '" + fam + "'");

    spec.depth = get_int("depth");
    spec.hidden_dim = get_int("hidden");

    const std::string op = get("operator");
    if (op == "sym_renorm") spec.op_kind = OperatorKind::SymRenorm;
    else if (op == "rw_renorm") spec.op_kind = OperatorKind::RwRenorm;
    else if (op == "sym_plain") spec.op_kind = OperatorKind::SymPlain;
    else if (op == "laplacian") spec.op_kind = OperatorKind::Laplacian;
    else if (op == "eta") spec.op_kind = OperatorKind::Eta;
    else throw std::invalid_argument("config key 'operator': unknown value '" + op + "'");
    spec.eta_weight = get_double("eta_w");

    const std::string trick = get("trick");
    if (trick == "none") spec.trick = Trick::None;
    else if (trick == "mean_sub") spec.trick = Trick::MeanSub;
    else if (trick == "pair_norm") spec.trick = Trick::PairNorm;
    else if (trick == "batch_norm") spec.trick = Trick::BatchNorm;
    else throw std::invalid_argument("config key 'trick': unknown value '" + trick + "'");
    spec.pair_norm_scale = get_double("pair_norm_scale");

    const std::string skip = get("skip");
    if (skip == "auto") spec.skip = spec.family != ModelFamily::Sgc && spec.depth > 3;
    else spec.skip = get_flag("skip") && spec.family != ModelFamily::Sgc;

    spec.seed = static_cast<std::uint64_t>(get_int("seed"));
    return spec;
}

TrainConfig ExperimentConfig::train_config() const {
    TrainConfig tc;
    tc.epochs = get_int("epochs");
    tc.learning_rate = get_double("lr");
    tc.weight_decay = get_double("weight_decay");
    tc.gamma = get_double("gamma");
    tc.dropout = get_double("dropout");
    tc.eval_every = get_int("eval_every");
    tc.seed = static_cast<std::uint64_t>(get_int("seed"));
    return tc;
}

std::string ExperimentConfig::default_config_text() {
    std::ostringstream out;
    out << "# gcnlab experiment configuration (key = value, '#' comments)\n";
    for (const auto& [k, v] : default_values()) out << k << " = " << v << "\n";
    return out.str();
}

}  // namespace gcnlab
