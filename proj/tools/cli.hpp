#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ldp::cli {

/// Exit statuses of the tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitSoftFail = 2;

/// A parsed and validated invocation. `params` is a flat JSON object holding
/// every parameter of the command: defaults, then --config file values, then flags.
struct RunConfig {
    std::string command;
    nlohmann::json params = nlohmann::json::object();
};

/// Thrown by parse_config when --help was requested; `text` is the usage.
struct HelpRequested {
    std::string text;
};

const std::vector<std::string>& commands();

/// Parses arguments (without the program name). Throws ldp::Error on unknown
/// flags or keys, type mismatches and violated preconditions.
RunConfig parse_config(const std::vector<std::string>& args);

/// Runs the command. Results go to the file named by `out` (with a JSON
/// manifest next to it) or to `out_stream` when no file is given.
int dispatch(const RunConfig& cfg, std::ostream& out_stream, std::ostream& err);

/// parse_config + dispatch with error reporting: one JSON line on `err` per
/// error, followed by a hint line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ldp::cli
