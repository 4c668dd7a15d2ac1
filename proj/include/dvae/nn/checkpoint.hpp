#pragma once

#include <filesystem>
#include <iosfwd>

#include "dvae/nn/network.hpp"

namespace dvae::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Little-endian record:
//   "DVAE" | version u32 | layer count u32
//   per layer: activation u8 | rows u32 | cols u32 | W (rows*cols f64, row-major) | b (rows f64)
void write_network(std::ostream& out, const DenseNetwork& net);
DenseNetwork read_network(std::istream& in);

void save_network(const std::filesystem::path& path, const DenseNetwork& net);
DenseNetwork load_network(const std::filesystem::path& path);

}  // namespace dvae::nn
