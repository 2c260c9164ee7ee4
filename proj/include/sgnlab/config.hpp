// Plain-text run configuration: `key = value` lines under [riemann], [soliton],
// [solver] and [output] headers. Parsing is strict.
#ifndef SGNLAB_CONFIG_HPP
#define SGNLAB_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>

#include "sgnlab/experiments.hpp"

namespace sgnlab {

class ConfigError : public std::runtime_error {
 public:
  /// line 0 means the error is not tied to a line.
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct RunConfig {
  ExperimentConfig experiment;
  std::filesystem::path output_dir = "out";
  /// Canonical "section.key" -> trimmed value, as written in the file.
  std::map<std::string, std::string> entries;
};

RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& file);

/// 64-bit FNV-1a of the sorted canonical entries; independent of key order,
/// spacing and comments.
std::uint64_t config_hash(const std::map<std::string, std::string>& entries);
std::string hash_hex(std::uint64_t h);

}  // namespace sgnlab

#endif  // SGNLAB_CONFIG_HPP
