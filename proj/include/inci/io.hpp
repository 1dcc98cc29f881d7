#ifndef INCI_IO_HPP
#define INCI_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace inci::io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Parses one JSON value per non-empty line. Throws std::runtime_error naming
/// the offending line.
std::vector<nlohmann::ordered_json> parse_jsonl(std::string_view text);
std::vector<nlohmann::ordered_json> read_jsonl(const std::filesystem::path& path);

std::string to_jsonl(const std::vector<nlohmann::ordered_json>& rows);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::ordered_json>& rows);

}  // namespace inci::io

#endif  // INCI_IO_HPP
