#include "prt/checkpoint.hpp"

#include <algorithm>
#include <sstream>

#include "prt/container.hpp"
#include "prt/errors.hpp"

namespace prt {

void save_network(const std::filesystem::path& path, const nn::NetworkState& state) {
  nn::validate(state);
  io::Container c;
  c.manifest.set("kind", "network");
  c.manifest.set("label_count", state.label_count);
  c.manifest.set("seed", state.seed);
  c.manifest.set("layers", state.layers.size());
  for (std::size_t i = 0; i < state.layers.size(); ++i) {
    const nn::Layer& l = state.layers[i];
    c.manifest.set("layer." + std::to_string(i),
                   std::to_string(l.weights.cols()) + " " + std::to_string(l.weights.rows()) + " " +
                       nn::to_string(l.activation) + " " + nn::to_string(l.group));
  }
  c.reals.reserve(state.parameter_count());
  for (const nn::Layer& l : state.layers) {
    c.reals.insert(c.reals.end(), l.weights.values().begin(), l.weights.values().end());
    c.reals.insert(c.reals.end(), l.bias.begin(), l.bias.end());
  }
  io::write_container(path, c);
}

nn::NetworkState load_network(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path);
  if (c.manifest.get("kind") != "network")
    throw IoError("'" + path.string() + "' is not a network checkpoint");

  nn::NetworkState state;
  state.label_count = c.manifest.get_u64("label_count");
  state.seed = c.manifest.get_u64("seed");
  const std::size_t count = c.manifest.get_u64("layers");
  std::size_t offset = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream in(c.manifest.get("layer." + std::to_string(i)));
    std::size_t in_dim = 0, out_dim = 0;
    std::string act, group;
    if (!(in >> in_dim >> out_dim >> act >> group))
      throw IoError("malformed layer entry " + std::to_string(i) + " in '" + path.string() + "'");
    nn::Layer l{Matrix(out_dim, in_dim), Vector(out_dim), nn::parse_activation(act),
                nn::parse_group(group)};
    const std::size_t need = out_dim * in_dim + out_dim;
    if (offset + need > c.reals.size())
      throw IoError("'" + path.string() + "' parameter block is too short");
    std::copy_n(c.reals.begin() + static_cast<std::ptrdiff_t>(offset), out_dim * in_dim,
                l.weights.data());
    offset += out_dim * in_dim;
    std::copy_n(c.reals.begin() + static_cast<std::ptrdiff_t>(offset), out_dim, l.bias.begin());
    offset += out_dim;
    state.layers.push_back(std::move(l));
  }
  if (offset != c.reals.size())
    throw IoError("'" + path.string() + "' parameter block has trailing values");
  nn::validate(state);
  return state;
}

}  // namespace prt
