#include "kernelsens/model_io.hpp"

#include "kernelsens/error.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace kernelsens {

namespace {

constexpr std::array<char, 8> kMagic = {'K', 'S', 'M', 'O', 'D', 'E', 'L', '1'};

template <class T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw FormatError("model file truncated");
    return v;
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) put<double>(out, M(i, j));
    }
}

Eigen::MatrixXd get_matrix(std::istream& in, std::uint64_t rows, std::uint64_t cols) {
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = get<double>(in);
    }
    return M;
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(out, v(i));
}

Eigen::VectorXd get_vector(std::istream& in, std::uint64_t n) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = get<double>(in);
    return v;
}

void put_header(std::ostream& out, std::uint8_t kind, bool allow_uneven, const Eigen::MatrixXd& W,
                std::uint64_t seed, const Activation& act) {
    out.write(kMagic.data(), kMagic.size());
    put<std::uint8_t>(out, kind);
    put<std::uint8_t>(out, allow_uneven ? 1 : 0);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(W.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(W.cols()));
    put<std::uint64_t>(out, seed);
    const std::string name = act.name();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_matrix(out, W);
}

}  // namespace

void save_model(std::ostream& out, const AnyModel& model) {
    if (const auto* rf = std::get_if<RfModel>(&model)) {
        put_header(out, 0, false, rf->weights(), rf->seed, rf->activation());
        put<std::uint8_t>(out, rf->fitted() ? 1 : 0);
        put<std::uint64_t>(out, static_cast<std::uint64_t>(rf->n_train()));
        put_vector(out, rf->theta());
    } else {
        const auto& ntk = std::get<NtkModel>(model);
        put_header(out, 1, ntk.allow_uneven(), ntk.weights(), ntk.seed, ntk.activation());
        put<std::uint8_t>(out, ntk.fitted() ? 1 : 0);
        put<std::uint64_t>(out, static_cast<std::uint64_t>(ntk.n_train()));
        put_matrix(out, ntk.train_inputs());
        put_vector(out, ntk.alpha());
    }
    if (!out) throw IoError("failed writing model");
}

AnyModel load_model(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw FormatError("not a kernelsens model file (bad magic)");
    const auto kind = get<std::uint8_t>(in);
    const bool allow_uneven = get<std::uint8_t>(in) != 0;
    const auto k = get<std::uint64_t>(in);
    const auto d = get<std::uint64_t>(in);
    const auto seed = get<std::uint64_t>(in);
    const auto name_len = get<std::uint32_t>(in);
    if (name_len > 256) throw FormatError("model file: activation name too long");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw FormatError("model file truncated");
    const Activation act = Activation::parse(name);
    Eigen::MatrixXd W = get_matrix(in, k, d);
    const bool fitted = get<std::uint8_t>(in) != 0;
    const auto n = get<std::uint64_t>(in);

    if (kind == 0) {
        RfModel m(std::move(W), act);
        m.seed = seed;
        Eigen::VectorXd theta = get_vector(in, k);
        if (fitted) m.set_theta(std::move(theta), static_cast<Eigen::Index>(n));
        return m;
    }
    if (kind == 1) {
        NtkModel m(std::move(W), act, allow_uneven);
        m.seed = seed;
        Eigen::MatrixXd X = get_matrix(in, n, d);
        Eigen::VectorXd alpha = get_vector(in, n);
        if (fitted) m.set_dual(std::move(X), std::move(alpha));
        return m;
    }
    throw FormatError("model file: unknown model kind " + std::to_string(kind));
}

void save_model(const std::filesystem::path& path, const AnyModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    save_model(out, model);
}

AnyModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return load_model(in);
}

}  // namespace kernelsens
