#pragma once

// Subcommands behind the fracvisc executable.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fracvisc {

enum ExitCode : int { kExitOk = 0, kExitFailedChecks = 1, kExitConfigError = 2 };

const std::vector<std::string>& subcommands();

struct AppRequest {
  std::string command;
  std::filesystem::path config;
  /// Overrides output_dir from the config.
  std::optional<std::filesystem::path> output{};
};

/// Runs one subcommand; progress goes to `out`, diagnostics to `err`.
int run_command(const AppRequest& request, std::ostream& out, std::ostream& err);

struct SelftestCase {
  std::string name;
  bool pass = false;
  std::string detail{};
};

/// Small closed-form checks covering every module; `seed` drives sampling.
std::vector<SelftestCase> run_selftest(std::uint64_t seed);

}  // namespace fracvisc
