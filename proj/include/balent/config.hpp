#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "balent/active_learning.hpp"

namespace balent {

/// Parses `key = value` lines (`#` starts a comment) on top of the defaults.
/// Unknown keys, duplicate keys and malformed values raise ConfigError naming
/// the key and line. The result is validated.
ALConfig parse_config(std::istream& in);
ALConfig load_config(const std::filesystem::path& path);

/// Sets one key; `line` is only used for error messages.
void apply_config_value(ALConfig& cfg, std::string_view key, std::string_view value, std::size_t line = 0);

/// Every key with its resolved value, in the same text format. Parsing the
/// output yields an identical configuration.
std::string render_config(const ALConfig& cfg);

}  // namespace balent
