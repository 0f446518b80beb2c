#include "lsvpm/csv.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "lsvpm/errors.hpp"

namespace lsvpm::csv {

std::string format(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return {buf, res.ptr};
}

double parse_double(std::string_view field) {
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
    if (field == "nan" || field == "-nan") return std::numeric_limits<double>::quiet_NaN();
    double value = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw Error(ErrorCode::Io, "cannot parse number '" + std::string(field) + "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::ofstream open_for_write(const std::filesystem::path& path, const std::string& comment) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    if (!comment.empty()) out << "# " << comment << '\n';
    return out;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                std::string_view expected_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != expected_header) {
                throw Error(ErrorCode::Io, "unexpected header '" + line + "' in " + path.string());
            }
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        for (auto f : split(line)) fields.emplace_back(f);
        rows.push_back(std::move(fields));
    }
    if (!header_seen) throw Error(ErrorCode::Io, "missing header in " + path.string());
    return rows;
}

}  // namespace lsvpm::csv
