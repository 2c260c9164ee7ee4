// Command-line front end: predict, simulate, sweep and compare.
#ifndef SGNLAB_CLI_HPP
#define SGNLAB_CLI_HPP

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace sgnlab {

/// Exit codes of run_cli.
enum ExitCode : int {
  kExitOk = 0,
  kExitRowFailure = 1,  ///< some requested rows or runs failed
  kExitUsage = 2,       ///< bad flags, bad config, bad parameters
  kExitAborted = 3,     ///< simulation stopped early
};

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string code_version;
  double wall_time = 0;
  std::vector<std::string> files;  ///< relative to the output directory
};

std::string code_version();

/// Writes dir/manifest.json.
void write_manifest(const RunManifest& m, const std::filesystem::path& dir);

/// Parses "a:b:n" into n evenly spaced values from a to b (n = 1 gives a).
std::vector<double> parse_range(const std::string& spec);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sgnlab

#endif  // SGNLAB_CLI_HPP
