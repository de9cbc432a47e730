#include "ecx/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "ecx/csv.hpp"

namespace ecx {

ExportPanel::ExportPanel(CountryRegistry countries, ProductRegistry products, int first_year,
                         std::vector<Matrix<double>> slices, int digit_level)
    : countries_(std::move(countries)),
      products_(std::move(products)),
      first_year_(first_year),
      digit_level_(digit_level),
      slices_(std::move(slices)) {
    if (slices_.empty() || countries_.empty() || products_.empty())
        throw ValidationError("empty panel");
    active_.reserve(slices_.size());
    for (const auto& s : slices_) {
        if (s.rows() != countries_.size() || s.cols() != products_.size())
            throw ValidationError("panel slice dimensions do not match registries");
        std::vector<std::uint8_t> active(s.rows(), 0);
        for (std::size_t c = 0; c < s.rows(); ++c) {
            for (double v : s.row(c)) {
                if (!std::isfinite(v) || v < 0.0)
                    throw ValidationError("export values must be finite and non-negative");
                if (v > 0.0) active[c] = 1;
            }
        }
        active_.push_back(std::move(active));
    }
}

std::vector<int> ExportPanel::years() const {
    std::vector<int> out(slices_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = first_year_ + static_cast<int>(i);
    return out;
}

bool ExportPanel::has_year(int year) const noexcept {
    return year >= first_year_ && year <= last_year();
}

std::size_t ExportPanel::year_index(int year) const {
    if (!has_year(year)) throw ValidationError("year " + std::to_string(year) + " not in panel");
    return static_cast<std::size_t>(year - first_year_);
}

GdpPanel::GdpPanel(CountryRegistry countries, int first_year, Matrix<double> gdp)
    : countries_(std::move(countries)), first_year_(first_year), gdp_(std::move(gdp)) {
    if (gdp_.rows() != countries_.size()) throw ValidationError("GDP table does not match registry");
    for (double v : gdp_.data())
        if (!std::isnan(v) && !(v > 0.0 && std::isfinite(v)))
            throw ValidationError("GDP per capita must be positive");
}

bool GdpPanel::has(std::string_view country, int year) const {
    auto c = countries_.find(country);
    if (!c || year < first_year_ || year > last_year()) return false;
    return !std::isnan(gdp_(*c, static_cast<std::size_t>(year - first_year_)));
}

double GdpPanel::value(std::string_view country, int year) const {
    if (!has(country, year))
        throw ValidationError("no GDP for " + std::string(country) + " in " + std::to_string(year));
    return gdp_(*countries_.find(country), static_cast<std::size_t>(year - first_year_));
}

GdpCoverage gdp_coverage(const ExportPanel& exports, const GdpPanel& gdp) {
    GdpCoverage out;
    for (std::size_t c = 0; c < exports.countries().size(); ++c) {
        const auto& code = exports.countries().code(c);
        bool any = false;
        for (int y : exports.years()) {
            if (gdp.has(code, y)) {
                any = true;
            } else {
                out.missing_country_years.emplace_back(y, code);
            }
        }
        if (!any) out.missing_everywhere.push_back(code);
    }
    std::sort(out.missing_country_years.begin(), out.missing_country_years.end());
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

struct PanelBuilder {
    int digit_level;
    std::map<std::tuple<int, std::string, std::string>, double> cells;

    void add(int year, std::string country, std::string product, double value) {
        cells[{year, std::move(country), std::move(product)}] += value;
    }

    ExportPanel build() const {
        if (cells.empty()) throw ValidationError("empty panel");
        std::set<std::string> cs, ps;
        int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
        for (const auto& [key, v] : cells) {
            lo = std::min(lo, std::get<0>(key));
            hi = std::max(hi, std::get<0>(key));
            cs.insert(std::get<1>(key));
            ps.insert(std::get<2>(key));
        }
        auto countries = CountryRegistry::from_codes({cs.begin(), cs.end()});
        auto products = ProductRegistry::from_codes({ps.begin(), ps.end()});
        std::vector<Matrix<double>> slices(static_cast<std::size_t>(hi - lo + 1),
                                           Matrix<double>(countries.size(), products.size(), 0.0));
        for (const auto& [key, v] : cells) {
            slices[static_cast<std::size_t>(std::get<0>(key) - lo)](
                countries.index(std::get<1>(key)), products.index(std::get<2>(key))) += v;
        }
        return ExportPanel(std::move(countries), std::move(products), lo, std::move(slices), digit_level);
    }
};

void check_digit_level(int digit_level) {
    if (digit_level != 4 && digit_level != 6)
        throw ValidationError("digit level must be 4 or 6, got " + std::to_string(digit_level));
}

std::string truncate_product(const std::string& code, int digit_level, const std::string& source,
                             std::size_t line) {
    if (code.empty() || !std::all_of(code.begin(), code.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
        throw ParseError(source, line, "product code must be numeric: '" + code + "'");
    if (code.size() < static_cast<std::size_t>(digit_level))
        throw ValidationError(source + ":" + std::to_string(line) + ": product code '" + code +
                              "' is shorter than digit level " + std::to_string(digit_level));
    return code.substr(0, static_cast<std::size_t>(digit_level));
}

}  // namespace

ExportPanel parse_export_csv(std::istream& in, int digit_level, const std::string& source) {
    check_digit_level(digit_level);
    CsvReader reader(in, source);
    reader.expect_header({"year", "country", "product", "value"});
    PanelBuilder builder{digit_level, {}};
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        const std::size_t line = reader.line();
        reader.require_fields(fields, 4);
        const int year = parse_int(fields[0], source, line);
        const double value = parse_number(fields[3], source, line);
        if (!std::isfinite(value))
            throw ValidationError(source + ":" + std::to_string(line) + ": non-finite export value");
        if (value < 0.0)
            throw ValidationError(source + ":" + std::to_string(line) + ": negative export value " + fields[3]);
        if (fields[1].empty()) throw ParseError(source, line, "empty country code");
        builder.add(year, fields[1], truncate_product(fields[2], digit_level, source, line), value);
    }
    return builder.build();
}

ExportPanel load_export_csv(const std::filesystem::path& path, int digit_level) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open export file: " + path.string());
    return parse_export_csv(in, digit_level, path.string());
}

void write_export_csv(const ExportPanel& panel, std::ostream& out) {
    out << "year,country,product,value\n";
    for (std::size_t t = 0; t < panel.year_count(); ++t) {
        const auto& s = panel.slice_at(t);
        const int year = panel.first_year() + static_cast<int>(t);
        for (std::size_t c = 0; c < s.rows(); ++c)
            for (std::size_t p = 0; p < s.cols(); ++p)
                if (s(c, p) != 0.0)
                    out << year << ',' << panel.countries().code(c) << ',' << panel.products().code(p) << ','
                        << format_double(s(c, p)) << '\n';
    }
}

ExportPanel aggregate_digits(const ExportPanel& panel, int digit_level) {
    check_digit_level(digit_level);
    if (digit_level > panel.digit_level())
        throw ValidationError("cannot aggregate to a finer digit level");
    PanelBuilder builder{digit_level, {}};
    for (std::size_t t = 0; t < panel.year_count(); ++t) {
        const auto& s = panel.slice_at(t);
        const int year = panel.first_year() + static_cast<int>(t);
        for (std::size_t c = 0; c < s.rows(); ++c)
            for (std::size_t p = 0; p < s.cols(); ++p)
                builder.add(year, panel.countries().code(c),
                            panel.products().code(p).substr(0, static_cast<std::size_t>(digit_level)), s(c, p));
    }
    return builder.build();
}

GdpPanel parse_gdp_csv(std::istream& in, const std::string& source) {
    CsvReader reader(in, source);
    reader.expect_header({"year", "country", "gdppc"});
    std::map<std::pair<std::string, int>, double> cells;
    std::set<std::string> cs;
    int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        const std::size_t line = reader.line();
        reader.require_fields(fields, 3);
        const int year = parse_int(fields[0], source, line);
        const double v = parse_number(fields[2], source, line);
        if (!(v > 0.0) || !std::isfinite(v))
            throw ValidationError(source + ":" + std::to_string(line) + ": GDP per capita must be positive, got " +
                                  fields[2]);
        if (!cells.emplace(std::make_pair(fields[1], year), v).second)
            throw ValidationError(source + ":" + std::to_string(line) + ": duplicate GDP entry for " + fields[1]);
        cs.insert(fields[1]);
        lo = std::min(lo, year);
        hi = std::max(hi, year);
    }
    if (cells.empty()) throw ValidationError("empty GDP panel");
    auto countries = CountryRegistry::from_codes({cs.begin(), cs.end()});
    Matrix<double> table(countries.size(), static_cast<std::size_t>(hi - lo + 1),
                         std::numeric_limits<double>::quiet_NaN());
    for (const auto& [key, v] : cells)
        table(countries.index(key.first), static_cast<std::size_t>(key.second - lo)) = v;
    return GdpPanel(std::move(countries), lo, std::move(table));
}

GdpPanel load_gdp_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open GDP file: " + path.string());
    return parse_gdp_csv(in, path.string());
}

void write_gdp_csv(const GdpPanel& panel, std::ostream& out) {
    out << "year,country,gdppc\n";
    const auto& t = panel.table();
    for (std::size_t y = 0; y < t.cols(); ++y)
        for (std::size_t c = 0; c < t.rows(); ++c)
            if (!std::isnan(t(c, y)))
                out << panel.first_year() + static_cast<int>(y) << ',' << panel.countries().code(c) << ','
                    << format_double(t(c, y)) << '\n';
}

}  // namespace ecx
