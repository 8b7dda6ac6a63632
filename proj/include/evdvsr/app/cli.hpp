#pragma once

#include "evdvsr/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace evdvsr::app {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kFailure = 3 };

/// Layers, lowest first: built-in defaults, the config file, EVDVSR_SEED
/// (train and data seeds), then `key=value` overrides.
Config resolve_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides,
                      const char* env_seed);
/// Same layering with the file contents given directly.
Config resolve_config_text(const std::string& file_text, const std::vector<std::string>& overrides,
                           const char* env_seed);

/// Entry point of the evdvsr tool. Never throws; returns an ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace evdvsr::app
