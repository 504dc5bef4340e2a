#include "kernelsens/data.hpp"

#include "kernelsens/error.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

namespace kernelsens {

LabelSpec LabelSpec::zero(double noise_std) {
    LabelSpec s;
    s.ground_truth = GroundTruth::Zero;
    s.noise_std = noise_std;
    return s;
}

LabelSpec LabelSpec::linear_unit(Eigen::VectorXd beta, double noise_std) {
    LabelSpec s;
    s.ground_truth = GroundTruth::LinearUnit;
    s.beta = std::move(beta);
    s.noise_std = noise_std;
    return s;
}

LabelSpec LabelSpec::constant_value(double c, double noise_std) {
    LabelSpec s;
    s.ground_truth = GroundTruth::Constant;
    s.constant = c;
    s.noise_std = noise_std;
    return s;
}

std::string to_string(ProvenanceKind kind) {
    switch (kind) {
        case ProvenanceKind::SyntheticSphereGaussian: return "sphere";
        case ProvenanceKind::SyntheticHypercube: return "hypercube";
        case ProvenanceKind::Mnist: return "mnist";
        case ProvenanceKind::Cifar10: return "cifar10";
    }
    return "unknown";
}

std::string to_string(PreprocessMode mode) {
    return mode == PreprocessMode::PaperFigures ? "paper-figures" : "assumption1";
}

PreprocessMode parse_preprocess_mode(const std::string& text) {
    if (text == "paper-figures" || text == "paperfigures" || text == "paper") {
        return PreprocessMode::PaperFigures;
    }
    if (text == "assumption1") return PreprocessMode::Assumption1;
    throw InvalidArgument("unknown preprocess mode '" + text +
                          "' (expected paper-figures | assumption1)");
}

namespace {

void check_shape(Eigen::Index n, Eigen::Index d) {
    if (n < 1) throw InvalidArgument("sample count must be >= 1");
    if (d < 2) throw InvalidArgument("input dimension must be >= 2 (sphere is degenerate)");
}

}  // namespace

void normalize_rows_to_sphere(Eigen::MatrixXd& X) {
    const double radius = std::sqrt(static_cast<double>(X.cols()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double norm = X.row(i).norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw InvalidArgument("cannot project row " + std::to_string(i) +
                                  " onto the sphere: zero or non-finite norm");
        }
        X.row(i) *= radius / norm;
    }
}

// Filled row by row so the draw order is fixed independently of storage order.
Eigen::MatrixXd sample_sphere_gaussian(Eigen::Index n, Eigen::Index d, Rng& rng) {
    check_shape(n, d);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) X(i, j) = normal(rng);
    }
    normalize_rows_to_sphere(X);
    return X;
}

Eigen::MatrixXd sample_hypercube(Eigen::Index n, Eigen::Index d, Rng& rng) {
    check_shape(n, d);
    std::bernoulli_distribution coin(0.5);
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) X(i, j) = coin(rng) ? 1.0 : -1.0;
    }
    return X;
}

Eigen::VectorXd make_labels(const Eigen::MatrixXd& X, const LabelSpec& spec, Rng& rng) {
    if (!(spec.noise_std >= 0.0) || !std::isfinite(spec.noise_std)) {
        throw InvalidArgument("noise_std must be finite and >= 0");
    }
    const Eigen::Index n = X.rows();
    Eigen::VectorXd y;
    switch (spec.ground_truth) {
        case GroundTruth::Zero: y = Eigen::VectorXd::Zero(n); break;
        case GroundTruth::Constant: y = Eigen::VectorXd::Constant(n, spec.constant); break;
        case GroundTruth::LinearUnit: {
            if (spec.beta.size() != X.cols()) {
                throw DimensionError("LinearUnit beta has length " + std::to_string(spec.beta.size()) +
                                     ", data has d = " + std::to_string(X.cols()));
            }
            const double bn = spec.beta.norm();
            if (std::abs(bn - 1.0) > 1e-9) throw InvalidArgument("LinearUnit beta must be a unit vector");
            y = X * spec.beta / std::sqrt(static_cast<double>(X.cols()));
            break;
        }
    }
    if (spec.noise_std > 0.0) {
        std::normal_distribution<double> normal(0.0, spec.noise_std);
        for (Eigen::Index i = 0; i < n; ++i) y(i) += normal(rng);
    }
    return y;
}

Dataset make_synthetic(ProvenanceKind kind, Eigen::Index n, Eigen::Index d, const LabelSpec& spec,
                       Rng& data_rng, Rng& noise_rng) {
    Dataset ds;
    switch (kind) {
        case ProvenanceKind::SyntheticSphereGaussian: ds.X = sample_sphere_gaussian(n, d, data_rng); break;
        case ProvenanceKind::SyntheticHypercube: ds.X = sample_hypercube(n, d, data_rng); break;
        default: throw InvalidArgument("make_synthetic: provenance must be synthetic");
    }
    ds.Y = make_labels(ds.X, spec, noise_rng);
    ds.provenance.kind = kind;
    ds.mode = PreprocessMode::Assumption1;
    ds.labels = spec;
    return ds;
}

// --- IDX -------------------------------------------------------------------

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error reading '" + path.string() + "'");
    return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
           (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

IdxTensor parse_idx(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4) throw FormatError("IDX: truncated magic number");
    if (bytes[0] != 0 || bytes[1] != 0) throw FormatError("IDX: magic number must start with two zero bytes");
    if (bytes[2] != 0x08) throw FormatError("IDX: only unsigned byte payloads (type 0x08) are supported");
    const std::size_t rank = bytes[3];
    if (rank == 0) throw FormatError("IDX: rank must be positive");
    const std::size_t header = 4 + 4 * rank;
    if (bytes.size() < header) throw FormatError("IDX: truncated dimension header");

    IdxTensor t;
    std::size_t count = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        const std::uint32_t dim = read_be32(bytes, 4 + 4 * i);
        t.dims.push_back(dim);
        count *= dim;
    }
    if (bytes.size() != header + count) {
        throw FormatError("IDX: payload has " + std::to_string(bytes.size() - header) +
                          " bytes, header declares " + std::to_string(count));
    }
    t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
    return t;
}

IdxTensor read_idx(const std::filesystem::path& path) { return parse_idx(read_all(path)); }

MnistFiles locate_mnist(const std::filesystem::path& dir) {
    const auto pick = [&dir](std::initializer_list<const char*> names) {
        for (const char* name : names) {
            const auto p = dir / name;
            if (std::filesystem::exists(p)) return p;
        }
        throw IoError("no MNIST file " + std::string(*names.begin()) + " in '" + dir.string() + "'");
    };
    return {pick({"train-images-idx3-ubyte", "train-images.idx3-ubyte"}),
            pick({"train-labels-idx1-ubyte", "train-labels.idx1-ubyte"})};
}

namespace {

void check_classes(int class_a, int class_b, Eigen::Index n_per_class) {
    if (class_a == class_b) throw InvalidArgument("class_a and class_b must differ");
    if (class_a < 0 || class_a > 9 || class_b < 0 || class_b > 9) {
        throw InvalidArgument("class labels must lie in [0, 9]");
    }
    if (n_per_class < 1) throw InvalidArgument("n_per_class must be >= 1");
}

// Turns raw pixel rows (already in [0,1]) into the requested preprocessing.
void preprocess(Eigen::MatrixXd& X, PreprocessMode mode) {
    if (mode == PreprocessMode::PaperFigures) return;
    const Eigen::RowVectorXd mean = X.colwise().mean();
    X.rowwise() -= mean;
    normalize_rows_to_sphere(X);
}

struct Selection {
    std::vector<std::size_t> a;
    std::vector<std::size_t> b;
};

template <class LabelAt>
Selection select_classes(std::size_t count, LabelAt label_at, int class_a, int class_b,
                         Eigen::Index n_per_class, const std::string& source) {
    Selection s;
    const auto want = static_cast<std::size_t>(n_per_class);
    for (std::size_t i = 0; i < count && (s.a.size() < want || s.b.size() < want); ++i) {
        const int label = label_at(i);
        if (label == class_a && s.a.size() < want) s.a.push_back(i);
        if (label == class_b && s.b.size() < want) s.b.push_back(i);
    }
    if (s.a.size() < want || s.b.size() < want) {
        throw CountError(source + ": requested " + std::to_string(want) + " samples per class, found " +
                         std::to_string(s.a.size()) + " of class " + std::to_string(class_a) + " and " +
                         std::to_string(s.b.size()) + " of class " + std::to_string(class_b));
    }
    return s;
}

}  // namespace

Dataset ingest_mnist(const MnistFiles& files, int class_a, int class_b, Eigen::Index n_per_class,
                     PreprocessMode mode) {
    check_classes(class_a, class_b, n_per_class);
    const auto image_bytes = read_all(files.images);
    const auto label_bytes = read_all(files.labels);
    if (image_bytes.size() < 4 || read_be32(image_bytes, 0) != 0x00000803u) {
        throw FormatError("MNIST images: bad magic number (expected 0x00000803) in '" +
                          files.images.string() + "'");
    }
    if (label_bytes.size() < 4 || read_be32(label_bytes, 0) != 0x00000801u) {
        throw FormatError("MNIST labels: bad magic number (expected 0x00000801) in '" +
                          files.labels.string() + "'");
    }
    const IdxTensor images = parse_idx(image_bytes);
    const IdxTensor labels = parse_idx(label_bytes);
    if (images.dims[0] != labels.dims[0]) {
        throw FormatError("MNIST: image count " + std::to_string(images.dims[0]) +
                          " differs from label count " + std::to_string(labels.dims[0]));
    }
    const std::size_t count = images.dims[0];
    const std::size_t pixels = static_cast<std::size_t>(images.dims[1]) * images.dims[2];

    const Selection sel = select_classes(
        count, [&labels](std::size_t i) { return static_cast<int>(labels.data[i]); }, class_a, class_b,
        n_per_class, "MNIST");

    Dataset ds;
    const Eigen::Index n = 2 * n_per_class;
    ds.X.resize(n, static_cast<Eigen::Index>(pixels));
    ds.Y.resize(n);
    Eigen::Index row = 0;
    for (const auto* idx : {&sel.a, &sel.b}) {
        const double y = (idx == &sel.a) ? 1.0 : -1.0;
        for (std::size_t i : *idx) {
            const std::uint8_t* px = images.data.data() + i * pixels;
            for (std::size_t j = 0; j < pixels; ++j) ds.X(row, static_cast<Eigen::Index>(j)) = px[j] / 255.0;
            ds.Y(row++) = y;
        }
    }
    preprocess(ds.X, mode);
    ds.provenance = {ProvenanceKind::Mnist, class_a, class_b};
    ds.mode = mode;
    return ds;
}

Dataset ingest_mnist(const std::filesystem::path& dir, int class_a, int class_b,
                     Eigen::Index n_per_class, PreprocessMode mode) {
    return ingest_mnist(locate_mnist(dir), class_a, class_b, n_per_class, mode);
}

Dataset ingest_cifar10(const std::filesystem::path& path, int class_a, int class_b,
                       Eigen::Index n_per_class, PreprocessMode mode) {
    check_classes(class_a, class_b, n_per_class);
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path)) {
        for (int b = 1; b <= 5; ++b) {
            const auto p = path / ("data_batch_" + std::to_string(b) + ".bin");
            if (std::filesystem::exists(p)) files.push_back(p);
        }
        if (files.empty()) throw IoError("no data_batch_*.bin files in '" + path.string() + "'");
    } else {
        files.push_back(path);
    }

    std::vector<std::uint8_t> records;
    for (const auto& f : files) {
        auto bytes = read_all(f);
        if (bytes.size() % kCifarRecordBytes != 0) {
            throw FormatError("CIFAR-10: '" + f.string() + "' has " + std::to_string(bytes.size()) +
                              " bytes, not a multiple of 3073");
        }
        for (std::size_t off = 0; off < bytes.size(); off += kCifarRecordBytes) {
            if (bytes[off] > 9) {
                throw FormatError("CIFAR-10: label byte " + std::to_string(bytes[off]) + " at record " +
                                  std::to_string(off / kCifarRecordBytes) + " of '" + f.string() +
                                  "' is outside [0, 9]");
            }
        }
        records.insert(records.end(), bytes.begin(), bytes.end());
    }
    const std::size_t count = records.size() / kCifarRecordBytes;
    const Selection sel = select_classes(
        count, [&records](std::size_t i) { return static_cast<int>(records[i * kCifarRecordBytes]); },
        class_a, class_b, n_per_class, "CIFAR-10");

    Dataset ds;
    const Eigen::Index n = 2 * n_per_class;
    ds.X.resize(n, kCifarPixels);
    ds.Y.resize(n);
    Eigen::Index row = 0;
    for (const auto* idx : {&sel.a, &sel.b}) {
        const double y = (idx == &sel.a) ? 1.0 : -1.0;
        for (std::size_t i : *idx) {
            const std::uint8_t* px = records.data() + i * kCifarRecordBytes + 1;
            for (Eigen::Index j = 0; j < kCifarPixels; ++j) ds.X(row, j) = px[j] / 255.0;
            ds.Y(row++) = y;
        }
    }
    preprocess(ds.X, mode);
    ds.provenance = {ProvenanceKind::Cifar10, class_a, class_b};
    ds.mode = mode;
    return ds;
}

}  // namespace kernelsens
