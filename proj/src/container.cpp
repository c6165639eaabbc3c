#include "prt/container.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>

#include "prt/errors.hpp"

namespace prt::io {

namespace {

constexpr const char* kMagic = "# prt container v1";
constexpr const char* kTerminator = "%%";

void put_le(std::string& out, std::uint64_t bits, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffU));
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

void Manifest::set(const std::string& key, const std::string& value) {
  if (key.empty() || key.find_first_of("=\n") != std::string::npos ||
      value.find('\n') != std::string::npos)
    throw IoError("manifest entries may not contain '=' in keys or newlines");
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = value;
      return;
    }
  entries_.emplace_back(key, value);
}

bool Manifest::contains(const std::string& key) const {
  return std::ranges::any_of(entries_, [&](const auto& e) { return e.first == key; });
}

const std::string& Manifest::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  throw IoError("manifest has no key '" + key + "'");
}

std::uint64_t Manifest::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const auto parsed = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return parsed;
  } catch (const std::exception&) {
    throw IoError("manifest key '" + key + "' is not an unsigned integer: '" + v + "'");
  }
}

void write_container(const std::filesystem::path& path, const Container& container) {
  Manifest manifest = container.manifest;
  manifest.set("reals", container.reals.size());
  manifest.set("ints", container.ints.size());

  std::string out = std::string(kMagic) + "\n";
  for (const auto& [k, v] : manifest.entries()) out += k + " = " + v + "\n";
  out += std::string(kTerminator) + "\n";
  out.reserve(out.size() + container.reals.size() * 8 + container.ints.size() * 4);
  for (double d : container.reals) put_le(out, std::bit_cast<std::uint64_t>(d), 8);
  for (std::int32_t i : container.ints) put_le(out, std::bit_cast<std::uint32_t>(i), 4);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  Container c;
  std::size_t pos = 0;
  bool first = true;
  bool terminated = false;
  while (pos < bytes.size()) {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) break;
    const std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    if (first) {
      if (line != kMagic) throw IoError("'" + path.string() + "' is not a prt container");
      first = false;
      continue;
    }
    if (line == kTerminator) {
      terminated = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed manifest line in '" + path.string() + "'");
    c.manifest.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  if (!terminated) throw IoError("'" + path.string() + "' has no manifest terminator");

  const std::uint64_t reals = c.manifest.get_u64("reals");
  const std::uint64_t ints = c.manifest.get_u64("ints");
  if (bytes.size() - pos != reals * 8 + ints * 4)
    throw IoError("'" + path.string() + "' payload size does not match its manifest");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  c.reals.resize(reals);
  for (auto& d : c.reals) {
    d = std::bit_cast<double>(get_le(p, 8));
    p += 8;
  }
  c.ints.resize(ints);
  for (auto& i : c.ints) {
    i = std::bit_cast<std::int32_t>(static_cast<std::uint32_t>(get_le(p, 4)));
    p += 4;
  }
  return c;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text,
                                                                 const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)).empty())
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace prt::io
