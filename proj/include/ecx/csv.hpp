#pragma once

#include <cstddef>
#include <initializer_list>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace ecx {

/// Minimal reader for the comma-separated, unquoted formats used by the toolkit.
class CsvReader {
public:
    CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    /// Reads the header and checks it matches `columns` exactly.
    void expect_header(std::initializer_list<std::string_view> columns);
    /// Next non-blank record; false at end of input.
    bool next(std::vector<std::string>& fields);
    void require_fields(const std::vector<std::string>& fields, std::size_t n) const;

    std::size_t line() const noexcept { return line_; }
    const std::string& source() const noexcept { return source_; }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_ = 0;
};

std::vector<std::string> split_csv_line(std::string_view line);
int parse_int(const std::string& field, const std::string& source, std::size_t line);
double parse_number(const std::string& field, const std::string& source, std::size_t line);

}  // namespace ecx
