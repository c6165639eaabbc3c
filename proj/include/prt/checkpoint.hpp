#pragma once

#include <filesystem>

#include "prt/nn.hpp"

namespace prt {

/// Manifest lists label_count, seed and one `layer.<i>` entry per layer
/// ("<in> <out> <activation> <group>"); the real block holds each layer's
/// row-major weights followed by its bias. load(save(s)) == s bit for bit.
void save_network(const std::filesystem::path& path, const nn::NetworkState& state);
nn::NetworkState load_network(const std::filesystem::path& path);

}  // namespace prt
