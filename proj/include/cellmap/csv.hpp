#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cellmap::csv {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);

/// A comma-separated table with a header row. Fields never contain commas,
/// quotes or newlines in any format this project writes.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws DataError when absent.
    std::size_t column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string_view origin = "<memory>");

/// Serializes with '\n' line endings and no trailing whitespace.
std::string to_string(const Table& table);
void write(const std::filesystem::path& path, const Table& table);

/// Writes `contents` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

} // namespace cellmap::csv
