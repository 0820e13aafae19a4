#pragma once

#include <string>

#include <json.hpp>

namespace musim {

// Loads an experiment config: JSON (.json) or INI-style sections
// ([section] / key = value, arrays as [a, b, c]). Unknown sections or keys
// are rejected with line/key diagnostics (thrown as ConfigError).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json load_config(const std::string& path);
nlohmann::json parse_ini(const std::string& text, const std::string& origin);

// Schema validation against the known section/key sets; throws ConfigError.
void validate_config(const nlohmann::json& cfg);

// FNV-1a hash of the canonical (sorted-key) serialization, hex string.
std::string config_hash(const nlohmann::json& cfg);

}  // namespace musim
