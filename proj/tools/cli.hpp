#pragma once

#include <json.hpp>

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace gplmbar::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Invalid configuration or command line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_data = 3,
    exit_not_converged = 4,
};

/// Every key a config file may set, with its default.
nlohmann::json default_config();

/// Overlays `patch` onto `base`; keys absent from `base` are an error.
void merge_config(nlohmann::json& base, const nlohmann::json& patch, const std::string& where = "");

/// FNV-1a 64 of the command and the resolved config, as 16 hex digits.
std::string manifest_hash(const std::string& command, const nlohmann::json& resolved);

/// Runs one command line (without the program name) and returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gplmbar::cli
