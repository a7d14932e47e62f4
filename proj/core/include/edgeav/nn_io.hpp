#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "edgeav/nn.hpp"

namespace edgeav::nn {

/// Version written in the header line of every model file.
inline constexpr int kModelFormatVersion = 1;

/// Text serialization of one network section; doubles are written with 17
/// significant digits so a save/load roundtrip is bit-exact.
void write_mlp(std::ostream& out, std::string_view name, const Mlp& model);
/// Throws FormatError on a malformed section or a name mismatch.
Mlp read_mlp(std::istream& in, std::string_view expected_name);

/// Everything a benchmark needs to replay a trained run.
struct ModelSnapshot {
  Mlp qnet;
  Mlp perception;

  friend bool operator==(const ModelSnapshot&, const ModelSnapshot&) = default;
};

std::string serialize_snapshot(const ModelSnapshot& snapshot);
ModelSnapshot parse_snapshot(const std::string& text);

/// Throws IoError when the file cannot be written or read, FormatError on
/// bad content.
void save_snapshot(const std::filesystem::path& path, const ModelSnapshot& snapshot);
ModelSnapshot load_snapshot(const std::filesystem::path& path);

}  // namespace edgeav::nn
