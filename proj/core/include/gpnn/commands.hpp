#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gpnn/config.hpp"

namespace gpnn {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitInputError = 2, kExitNumericError = 3 };

struct Artifact {
  std::string name;     // file name inside the output directory
  std::string content;
};

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<Artifact> artifacts;
  std::string summary;  // one or two human-readable lines
};

const std::vector<std::string>& command_names();

/// Runs a subcommand against a parsed config and stages its artifacts in
/// memory.  Dataset files are read; nothing is written.
CommandResult execute_command(const std::string& command, const ExperimentConfig& cfg);

/// Writes every artifact into `dir` (created if needed).  If any write fails
/// the files written so far are removed and the error rethrown.
void write_artifacts(const std::filesystem::path& dir, const std::vector<Artifact>& artifacts);

struct CliRequest {
  std::string command;
  std::optional<std::filesystem::path> config;  // optional only for selfcheck
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
};

/// Full CLI behaviour: parse, execute, write, report.  Returns the exit code.
int run_cli(const CliRequest& req, std::ostream& out, std::ostream& err);

/// First line of every CSV artifact: "# provenance: <json>".
std::string provenance_line(const nlohmann::json& provenance);

}  // namespace gpnn
