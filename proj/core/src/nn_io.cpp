#include "edgeav/nn_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "edgeav/errors.hpp"

namespace edgeav::nn {

namespace {

constexpr std::string_view kMagic = "edgeav-model";

void write_values(std::ostream& out, std::span<const double> values) {
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    if (i > 0) out << ' ';
    out << buf;
  }
  out << '\n';
}

template <typename T>
T read_token(std::istream& in, const char* what) {
  T value{};
  if (!(in >> value)) throw FormatError(std::string("model file: expected ") + what);
  return value;
}

void expect_word(std::istream& in, std::string_view word) {
  const auto got = read_token<std::string>(in, "keyword");
  if (got != word) {
    throw FormatError("model file: expected '" + std::string(word) + "', found '" + got + "'");
  }
}

double read_double(std::istream& in) {
  // operator>> rejects "nan"/"inf"; route through strtod so they surface
  // as a validation error rather than a parse failure.
  const auto token = read_token<std::string>(in, "number");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw FormatError("model file: bad number '" + token + "'");
  return v;
}

}  // namespace

void write_mlp(std::ostream& out, std::string_view name, const Mlp& model) {
  out << "mlp " << name << ' ' << model.layers.size() << '\n';
  for (const DenseLayer& layer : model.layers) {
    out << "dense " << layer.in_dim() << ' ' << layer.out_dim() << ' ' << to_string(layer.activation)
        << ' ' << (layer.mask.empty() ? 0 : 1) << '\n';
    for (std::size_t r = 0; r < layer.W.rows(); ++r) write_values(out, layer.W.row(r));
    write_values(out, layer.b);
    if (!layer.mask.empty()) {
      for (std::size_t i = 0; i < layer.mask.size(); ++i) {
        out << (i > 0 ? " " : "") << static_cast<int>(layer.mask[i]);
      }
      out << '\n';
    }
  }
}

Mlp read_mlp(std::istream& in, std::string_view expected_name) {
  expect_word(in, "mlp");
  const auto name = read_token<std::string>(in, "network name");
  if (name != expected_name) {
    throw FormatError("model file: expected network '" + std::string(expected_name) + "', found '" +
                      name + "'");
  }
  const auto count = read_token<std::size_t>(in, "layer count");
  if (count == 0 || count > 64) throw FormatError("model file: implausible layer count");

  Mlp model;
  for (std::size_t l = 0; l < count; ++l) {
    expect_word(in, "dense");
    const auto in_dim = read_token<std::size_t>(in, "input size");
    const auto out_dim = read_token<std::size_t>(in, "output size");
    if (in_dim == 0 || out_dim == 0 || in_dim > 1u << 16 || out_dim > 1u << 16) {
      throw FormatError("model file: implausible layer size");
    }
    const auto act_name = read_token<std::string>(in, "activation");
    const auto activation = parse_activation(act_name);
    if (!activation) throw FormatError("model file: unknown activation '" + act_name + "'");
    const auto masked = read_token<int>(in, "mask flag");

    DenseLayer layer;
    layer.activation = *activation;
    layer.W = Matrix(out_dim, in_dim);
    for (double& w : layer.W.data()) w = read_double(in);
    layer.b.resize(out_dim);
    for (double& b : layer.b) b = read_double(in);
    if (masked != 0) {
      layer.mask.resize(layer.W.size());
      for (auto& m : layer.mask) {
        const int v = read_token<int>(in, "mask entry");
        if (v != 0 && v != 1) throw FormatError("model file: mask entries must be 0 or 1");
        m = static_cast<std::uint8_t>(v);
      }
    }
    model.layers.push_back(std::move(layer));
  }
  try {
    model.validate();
  } catch (const std::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  return model;
}

std::string serialize_snapshot(const ModelSnapshot& snapshot) {
  std::ostringstream out;
  out << kMagic << ' ' << kModelFormatVersion << '\n';
  write_mlp(out, "qnet", snapshot.qnet);
  write_mlp(out, "perception", snapshot.perception);
  out << "end\n";
  return out.str();
}

ModelSnapshot parse_snapshot(const std::string& text) {
  std::istringstream in(text);
  expect_word(in, kMagic);
  const int version = read_token<int>(in, "format version");
  if (version != kModelFormatVersion) {
    throw FormatError("model file: unsupported format version " + std::to_string(version));
  }
  ModelSnapshot snapshot;
  snapshot.qnet = read_mlp(in, "qnet");
  snapshot.perception = read_mlp(in, "perception");
  expect_word(in, "end");
  return snapshot;
}

void save_snapshot(const std::filesystem::path& path, const ModelSnapshot& snapshot) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << serialize_snapshot(snapshot);
  if (!out.flush()) throw IoError("failed writing '" + path.string() + "'");
}

ModelSnapshot load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_snapshot(buf.str());
}

}  // namespace edgeav::nn
