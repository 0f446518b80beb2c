#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace lsvpm::csv {

/// Shortest representation that parses back to the same double (bit-stable round trip).
std::string format(double value);
double parse_double(std::string_view field);
std::vector<std::string_view> split(std::string_view line);

/// Opens `path` for writing, creating parent directories; emits `# <comment>` first when nonempty.
std::ofstream open_for_write(const std::filesystem::path& path, const std::string& comment);

/// Reads a CSV, skipping `#` comment lines, and checks the header matches `expected_header`.
std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                std::string_view expected_header);

}  // namespace lsvpm::csv
