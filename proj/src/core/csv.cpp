#include "ecx/csv.hpp"

#include <charconv>

#include "ecx/error.hpp"

namespace ecx {

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
        out.emplace_back(field);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

void CsvReader::expect_header(std::initializer_list<std::string_view> columns) {
    std::string text;
    if (!std::getline(in_, text)) throw ParseError(source_, 1, "missing header");
    line_ = 1;
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF) text.erase(0, 3);  // UTF-8 BOM
    const auto fields = split_csv_line(text);
    bool ok = fields.size() == columns.size();
    std::size_t i = 0;
    for (auto col : columns) {
        if (!ok) break;
        ok = fields[i++] == col;
    }
    if (!ok) {
        std::string want;
        for (auto col : columns) want += (want.empty() ? "" : ",") + std::string(col);
        throw ParseError(source_, 1, "expected header '" + want + "'");
    }
}

bool CsvReader::next(std::vector<std::string>& fields) {
    std::string text;
    while (std::getline(in_, text)) {
        ++line_;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        fields = split_csv_line(text);
        return true;
    }
    return false;
}

void CsvReader::require_fields(const std::vector<std::string>& fields, std::size_t n) const {
    if (fields.size() != n)
        throw ParseError(source_, line_, "expected " + std::to_string(n) + " fields, got " +
                                             std::to_string(fields.size()));
}

int parse_int(const std::string& field, const std::string& source, std::size_t line) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError(source, line, "not an integer: '" + field + "'");
    return v;
}

double parse_number(const std::string& field, const std::string& source, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError(source, line, "not a number: '" + field + "'");
    return v;
}

}  // namespace ecx
