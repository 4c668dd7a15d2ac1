#include "dvae/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace dvae::nn {

namespace {

constexpr std::array<char, 4> kMagic = {'D', 'V', 'A', 'E'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

void read_exact(std::istream& in, unsigned char* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw InvalidArgument("checkpoint: unexpected end of data");
  }
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  read_exact(in, b, 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  read_exact(in, b, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

void write_network(std::ostream& out, const DenseNetwork& net) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(net.layer_count()));
  for (const auto& layer : net.layers()) {
    out.put(static_cast<char>(layer.activation));
    put_u32(out, static_cast<std::uint32_t>(layer.weight.rows()));
    put_u32(out, static_cast<std::uint32_t>(layer.weight.cols()));
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) put_f64(out, layer.weight.data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) put_f64(out, layer.bias[i]);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

DenseNetwork read_network(std::istream& in) {
  std::array<unsigned char, 4> magic{};
  read_exact(in, magic.data(), 4);
  if (std::memcmp(magic.data(), kMagic.data(), 4) != 0) {
    throw InvalidArgument("checkpoint: bad magic (expected \"DVAE\")");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    throw InvalidArgument("checkpoint: unsupported format version " + std::to_string(version));
  }
  const std::uint32_t count = get_u32(in);
  std::vector<DenseLayer> layers;
  layers.reserve(count);
  for (std::uint32_t l = 0; l < count; ++l) {
    unsigned char tag = 0;
    read_exact(in, &tag, 1);
    if (tag > static_cast<unsigned char>(Activation::relu)) {
      throw InvalidArgument("checkpoint: unknown activation tag " + std::to_string(tag));
    }
    DenseLayer layer;
    layer.activation = static_cast<Activation>(tag);
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    layer.weight.resize(rows, cols);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = get_f64(in);
    layer.bias.resize(rows);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = get_f64(in);
    layers.push_back(std::move(layer));
  }
  return DenseNetwork(std::move(layers));
}

void save_network(const std::filesystem::path& path, const DenseNetwork& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_network(out, net);
}

DenseNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open checkpoint " + path.string());
  return read_network(in);
}

}  // namespace dvae::nn
