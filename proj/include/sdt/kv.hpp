// SPDX-License-Identifier: Apache-2.0
// Helpers for the flat key=value text used by configs, checkpoints, reports.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sdt::kv {

/// Parses "key=value" lines; '#' starts a comment, blank lines are skipped.
/// Throws ConfigError on malformed or duplicate keys.
std::map<std::string, std::string> parse(const std::string& text);
std::string format(const std::map<std::string, std::string>& entries);

double to_double(const std::string& key, const std::string& value);
std::size_t to_size(const std::string& key, const std::string& value);
std::uint64_t to_u64(const std::string& key, const std::string& value);
bool to_bool(const std::string& key, const std::string& value);
std::vector<std::size_t> to_size_list(const std::string& key, const std::string& value);

/// Shortest decimal that round-trips the double exactly.
std::string number(double v);

}  // namespace sdt::kv
