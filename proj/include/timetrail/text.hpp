#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace timetrail {

// Splits on '\n', dropping a trailing '\r' from each line and a final empty
// line. Views point into `text`.
std::vector<std::string_view> split_lines(std::string_view text);

// Plain comma split; the formats handled here never quote fields.
std::vector<std::string_view> split_fields(std::string_view line);

// Throws IoError with the path on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

}  // namespace timetrail
