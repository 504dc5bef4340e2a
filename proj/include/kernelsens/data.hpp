#pragma once

#include "kernelsens/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kernelsens {

enum class ProvenanceKind { SyntheticSphereGaussian, SyntheticHypercube, Mnist, Cifar10 };

struct Provenance {
    ProvenanceKind kind = ProvenanceKind::SyntheticSphereGaussian;
    int class_a = -1;  // image datasets only
    int class_b = -1;
};

// PaperFigures: pixels scaled to [0, 1] only.
// Assumption1: additionally centered per feature and rows rescaled to norm sqrt(d).
enum class PreprocessMode { PaperFigures, Assumption1 };

enum class GroundTruth { Zero, LinearUnit, Constant };

struct LabelSpec {
    GroundTruth ground_truth = GroundTruth::Zero;
    Eigen::VectorXd beta;  // unit direction, LinearUnit only
    double constant = 0.0; // Constant only
    double noise_std = 0.0;

    static LabelSpec zero(double noise_std = 0.0);
    static LabelSpec linear_unit(Eigen::VectorXd beta, double noise_std = 0.0);
    static LabelSpec constant_value(double c, double noise_std = 0.0);
};

struct Dataset {
    Eigen::MatrixXd X;  // N x d, one sample per row
    Eigen::VectorXd Y;  // N
    Provenance provenance;
    PreprocessMode mode = PreprocessMode::Assumption1;
    std::optional<LabelSpec> labels;  // set when Y came from make_labels

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index d() const { return X.cols(); }
};

std::string to_string(ProvenanceKind kind);
std::string to_string(PreprocessMode mode);
PreprocessMode parse_preprocess_mode(const std::string& text);

/// Rows are i.i.d. uniform on the sphere of radius sqrt(d) (normalized
/// standard Gaussians). Requires n >= 1, d >= 2.
Eigen::MatrixXd sample_sphere_gaussian(Eigen::Index n, Eigen::Index d, Rng& rng);

/// Rows are i.i.d. uniform on {-1, +1}^d.
Eigen::MatrixXd sample_hypercube(Eigen::Index n, Eigen::Index d, Rng& rng);

/// Y_i = g(x_i) + eps_i, eps_i ~ N(0, noise_std^2). LinearUnit uses
/// g(x) = beta^T x / sqrt(d) so labels stay order one.
Eigen::VectorXd make_labels(const Eigen::MatrixXd& X, const LabelSpec& spec, Rng& rng);

/// Synthetic dataset with labels attached.
Dataset make_synthetic(ProvenanceKind kind, Eigen::Index n, Eigen::Index d, const LabelSpec& spec,
                       Rng& data_rng, Rng& noise_rng);

// Row rescaling to norm sqrt(d), in place. Throws on a zero row.
void normalize_rows_to_sphere(Eigen::MatrixXd& X);

// IDX container: big-endian header, uint8 payload only.
struct IdxTensor {
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> data;
};

IdxTensor parse_idx(const std::vector<std::uint8_t>& bytes);
IdxTensor read_idx(const std::filesystem::path& path);

struct MnistFiles {
    std::filesystem::path images;
    std::filesystem::path labels;
};

/// Finds the training image/label IDX pair inside a directory
/// (`train-images-idx3-ubyte` / `train-labels-idx1-ubyte`, or dotted names).
MnistFiles locate_mnist(const std::filesystem::path& dir);

/// Two-class subset: the first n_per_class images of class_a (label +1)
/// followed by the first n_per_class images of class_b (label -1).
Dataset ingest_mnist(const MnistFiles& files, int class_a, int class_b, Eigen::Index n_per_class,
                     PreprocessMode mode);
Dataset ingest_mnist(const std::filesystem::path& dir, int class_a, int class_b,
                     Eigen::Index n_per_class, PreprocessMode mode);

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr Eigen::Index kCifarPixels = 3072;

/// Accepts a single CIFAR-10 binary batch file or a directory holding
/// data_batch_1.bin ... data_batch_5.bin.
Dataset ingest_cifar10(const std::filesystem::path& path, int class_a, int class_b,
                       Eigen::Index n_per_class, PreprocessMode mode);

}  // namespace kernelsens
