#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nnose {

/// Flat key=value text: one pair per line, '#' starts a comment, blank
/// lines ignored, whitespace around keys and values trimmed. Order is kept.
std::vector<std::pair<std::string, std::string>> parse_kv(std::string_view text);
std::vector<std::pair<std::string, std::string>> read_kv_file(const std::filesystem::path& path);

/// Splits "key=value"; throws InvalidArgument without '='.
std::pair<std::string, std::string> split_assignment(std::string_view text);

}  // namespace nnose
