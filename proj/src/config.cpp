#include "kernelsens/config.hpp"

#include "kernelsens/activations.hpp"
#include "kernelsens/error.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

namespace kernelsens {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

long parse_long(const std::string& text, const std::string& key) {
    try {
        std::size_t used = 0;
        const long v = std::stol(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("'" + key + "': expected an integer, got '" + text + "'");
}

double parse_double(const std::string& text, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("'" + key + "': expected a number, got '" + text + "'");
}

bool parse_bool(const std::string& text, const std::string& key) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("'" + key + "': expected true/false, got '" + text + "'");
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& source) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
        if (!out.emplace(key, value).second) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
    }
    return out;
}

std::vector<long> parse_long_list(const std::string& text) {
    std::vector<long> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty entry in list '" + text + "'");
        out.push_back(parse_long(item, "list"));
    }
    return out;
}

std::string to_string(DataSourceKind kind) {
    switch (kind) {
        case DataSourceKind::Sphere: return "sphere";
        case DataSourceKind::Hypercube: return "hypercube";
        case DataSourceKind::Mnist: return "mnist";
        case DataSourceKind::Cifar10: return "cifar10";
    }
    return "unknown";
}

DataSourceKind parse_data_source(const std::string& text) {
    if (text == "sphere" || text == "gaussian") return DataSourceKind::Sphere;
    if (text == "hypercube") return DataSourceKind::Hypercube;
    if (text == "mnist") return DataSourceKind::Mnist;
    if (text == "cifar10" || text == "cifar") return DataSourceKind::Cifar10;
    throw ConfigError("unknown dataset '" + text + "' (expected sphere | hypercube | mnist | cifar10)");
}

SweepLabels parse_sweep_labels(const std::string& text, double noise_std) {
    SweepLabels l;
    l.noise_std = noise_std;
    if (text == "zero") {
        l.kind = LabelKind::Zero;
    } else if (text == "linear") {
        l.kind = LabelKind::Linear;
    } else if (text.rfind("constant:", 0) == 0) {
        l.kind = LabelKind::Constant;
        l.constant = parse_double(text.substr(9), "labels");
    } else {
        throw ConfigError("unknown labels '" + text + "' (expected zero | linear | constant:<c>)");
    }
    return l;
}

std::string to_string(const SweepLabels& labels) {
    switch (labels.kind) {
        case LabelKind::Zero: return "zero";
        case LabelKind::Linear: return "linear";
        case LabelKind::Constant: {
            std::ostringstream os;
            os.precision(17);
            os << "constant:" << labels.constant;
            return os.str();
        }
    }
    return "unknown";
}

void SweepConfig::validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (test_points < 1) throw ConfigError("test_points must be >= 1");
    if (d < 2) throw ConfigError("d must be >= 2");
    if (n_list.empty() || k_list.empty()) throw ConfigError("n_list and k_list must be non-empty");
    for (long n : n_list) {
        if (n < 1) throw ConfigError("n_list entries must be positive");
    }
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        if (k_list[i] < 1) throw ConfigError("k_list entries must be positive");
        if (i > 0 && k_list[i] <= k_list[i - 1]) throw ConfigError("k_list must be strictly increasing");
    }
    if (!(labels.noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
    const Activation act = Activation::parse(activation);
    if (model == ModelKind::NTK && !act.is_even() && !allow_uneven) {
        throw ConfigError("NTK sweeps need an even activation; set allow_uneven = true to use '" +
                          activation + "'");
    }
    if ((source.kind == DataSourceKind::Mnist || source.kind == DataSourceKind::Cifar10) &&
        source.path.empty()) {
        throw ConfigError("image datasets need data_path");
    }
}

SweepConfig parse_sweep_config(const std::string& text, const std::string& source) {
    auto kv = parse_key_values(text, source);
    SweepConfig cfg;
    double noise_std = cfg.labels.noise_std;
    std::string labels = "zero";
    const auto take = [&kv](const char* key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    try {
        if (auto v = take("model")) cfg.model = parse_model_kind(*v);
        if (auto v = take("activation")) cfg.activation = *v;
        if (auto v = take("d")) cfg.d = parse_long(*v, "d");
        if (auto v = take("n_list")) cfg.n_list = parse_long_list(*v);
        if (auto v = take("k_list")) cfg.k_list = parse_long_list(*v);
        if (auto v = take("trials")) cfg.trials = parse_long(*v, "trials");
        if (auto v = take("test_points")) cfg.test_points = parse_long(*v, "test_points");
        if (auto v = take("noise_std")) noise_std = parse_double(*v, "noise_std");
        if (auto v = take("labels")) labels = *v;
        if (auto v = take("dataset")) cfg.source.kind = parse_data_source(*v);
        if (auto v = take("data_path")) cfg.source.path = *v;
        if (auto v = take("classes")) {
            const auto cls = parse_long_list(*v);
            if (cls.size() != 2) throw ConfigError("classes: expected two comma-separated labels");
            cfg.source.class_a = static_cast<int>(cls[0]);
            cfg.source.class_b = static_cast<int>(cls[1]);
        }
        if (auto v = take("pool_per_class")) cfg.source.pool_per_class = parse_long(*v, "pool_per_class");
        if (auto v = take("mode")) cfg.mode = parse_preprocess_mode(*v);
        if (auto v = take("seed")) cfg.master_seed = static_cast<std::uint64_t>(parse_long(*v, "seed"));
        if (auto v = take("allow_uneven")) cfg.allow_uneven = parse_bool(*v, "allow_uneven");
        if (auto v = take("threads")) cfg.threads = static_cast<int>(parse_long(*v, "threads"));
        cfg.labels = parse_sweep_labels(labels, noise_std);
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(source + ": " + e.what());
    }
    if (!kv.empty()) throw ConfigError(source + ": unknown key '" + kv.begin()->first + "'");
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_sweep_config(ss.str(), path.string());
}

}  // namespace kernelsens
