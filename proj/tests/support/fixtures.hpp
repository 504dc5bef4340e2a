#pragma once

// Tiny on-disk MNIST / CIFAR-10 look-alikes for loader tests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace fixture {

namespace fs = std::filesystem;

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("kernelsens_" + tag + "_" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(p, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

inline std::vector<std::uint8_t> idx_header(std::uint8_t rank, const std::vector<std::uint32_t>& dims) {
    std::vector<std::uint8_t> b{0, 0, 0x08, rank};
    for (auto d : dims) put_u32(b, d);
    return b;
}

// Labels cycle 0..9; image i has every pixel equal to (7 i + j) mod 256 at pixel j.
inline void write_mnist(const fs::path& dir, std::uint32_t count, std::uint32_t rows = 28, std::uint32_t cols = 28,
                        bool dotted_names = false) {
    auto images = idx_header(3, {count, rows, cols});
    for (std::uint32_t i = 0; i < count; ++i)
        for (std::uint32_t j = 0; j < rows * cols; ++j) images.push_back(static_cast<std::uint8_t>((7 * i + j) % 256));
    auto labels = idx_header(1, {count});
    for (std::uint32_t i = 0; i < count; ++i) labels.push_back(static_cast<std::uint8_t>(i % 10));
    write_bytes(dir / (dotted_names ? "train-images.idx3-ubyte" : "train-images-idx3-ubyte"), images);
    write_bytes(dir / (dotted_names ? "train-labels.idx1-ubyte" : "train-labels-idx1-ubyte"), labels);
}

inline std::vector<std::uint8_t> cifar_records(std::uint32_t count, std::uint32_t label_offset = 0) {
    std::vector<std::uint8_t> b;
    b.reserve(count * 3073u);
    for (std::uint32_t i = 0; i < count; ++i) {
        b.push_back(static_cast<std::uint8_t>((i + label_offset) % 10));
        for (std::uint32_t j = 0; j < 3072; ++j) b.push_back(static_cast<std::uint8_t>((13 * i + j) % 256));
    }
    return b;
}

}  // namespace fixture
