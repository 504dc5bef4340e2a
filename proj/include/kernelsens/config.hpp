#pragma once

#include "kernelsens/data.hpp"
#include "kernelsens/models.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace kernelsens {

/// Flat `key = value` text. `#` starts a comment; blank lines are ignored;
/// keys are case-sensitive and may appear once.
std::map<std::string, std::string> parse_key_values(const std::string& text,
                                                    const std::string& source = "<config>");

enum class DataSourceKind { Sphere, Hypercube, Mnist, Cifar10 };

struct DataSource {
    DataSourceKind kind = DataSourceKind::Sphere;
    std::filesystem::path path;  // image datasets only
    int class_a = 3;
    int class_b = 5;
    // 0 means "max(N_list) + test_points + centering rows"
    long pool_per_class = 0;
};

enum class LabelKind { Zero, Linear, Constant };

// Label recipe for sweeps. Linear uses beta = e_1.
struct SweepLabels {
    LabelKind kind = LabelKind::Zero;
    double constant = 0.0;
    double noise_std = 1.0;
};

struct SweepConfig {
    ModelKind model = ModelKind::RF;
    std::string activation = "tanh";
    long d = 200;
    std::vector<long> n_list{100, 200};
    std::vector<long> k_list{800, 1600, 3200, 6400, 12800};
    long trials = 20;
    long test_points = 10;
    SweepLabels labels;
    DataSource source;
    std::uint64_t master_seed = 0;
    PreprocessMode mode = PreprocessMode::Assumption1;
    bool allow_uneven = false;
    int threads = 0;  // 0 = hardware concurrency / environment override

    void validate() const;
};

SweepConfig parse_sweep_config(const std::string& text, const std::string& source = "<config>");
SweepConfig load_sweep_config(const std::filesystem::path& path);

std::vector<long> parse_long_list(const std::string& text);
std::string to_string(DataSourceKind kind);
DataSourceKind parse_data_source(const std::string& text);
SweepLabels parse_sweep_labels(const std::string& text, double noise_std);
std::string to_string(const SweepLabels& labels);

}  // namespace kernelsens
