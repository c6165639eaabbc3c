#pragma once

// On-disk container shared by checkpoints, cluster models, dictionaries and
// datasets: a `key = value` text manifest terminated by a `%%` line, then a
// little-endian float64 block and a little-endian int32 block. The block
// lengths are recorded in the manifest as `reals` and `ints`.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace prt::io {

class Manifest {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }

  bool contains(const std::string& key) const;
  /// Throws IoError naming the key when absent.
  const std::string& get(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct Container {
  Manifest manifest;
  std::vector<double> reals;
  std::vector<std::int32_t> ints;
};

void write_container(const std::filesystem::path& path, const Container& container);
Container read_container(const std::filesystem::path& path);

/// Text `key = value` lines with `#` comments, as used by experiment configs.
/// Throws ConfigError carrying the 1-based line number of a malformed line.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text,
                                                                 const std::string& origin);

std::string trim(const std::string& s);

}  // namespace prt::io
