#pragma once

#include "kernelsens/models.hpp"

#include <filesystem>
#include <iosfwd>
#include <variant>

namespace kernelsens {

// Binary container, little-endian host doubles:
//   "KSMODEL1" | u8 kind (0 = rf, 1 = ntk) | u8 allow_uneven | u64 k | u64 d | u64 seed
//   | u32 len + activation name | V or W0 (k*d, row-major)
//   | rf:  u8 fitted | u64 n_train | theta (k)
//   | ntk: u8 fitted | u64 N | train X (N*d, row-major) | alpha (N)
using AnyModel = std::variant<RfModel, NtkModel>;

void save_model(std::ostream& out, const AnyModel& model);
AnyModel load_model(std::istream& in);

void save_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace kernelsens
