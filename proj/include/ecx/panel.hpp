#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ecx/matrix.hpp"
#include "ecx/registry.hpp"

namespace ecx {

/// Export value per (country, product, year), stored as one
/// country x product slice per year. Immutable after construction.
class ExportPanel {
public:
    ExportPanel(CountryRegistry countries, ProductRegistry products, int first_year,
                std::vector<Matrix<double>> slices, int digit_level);

    const CountryRegistry& countries() const noexcept { return countries_; }
    const ProductRegistry& products() const noexcept { return products_; }
    int digit_level() const noexcept { return digit_level_; }

    int first_year() const noexcept { return first_year_; }
    int last_year() const noexcept { return first_year_ + static_cast<int>(slices_.size()) - 1; }
    std::size_t year_count() const noexcept { return slices_.size(); }
    std::vector<int> years() const;
    bool has_year(int year) const noexcept;
    std::size_t year_index(int year) const;

    const Matrix<double>& slice_at(std::size_t t) const { return slices_.at(t); }
    const Matrix<double>& slice(int year) const { return slices_[year_index(year)]; }
    double value(std::size_t country, std::size_t product, std::size_t t) const {
        return slices_[t](country, product);
    }

    /// False when the country exported nothing in year index t; metric ops skip such rows.
    bool country_active(std::size_t country, std::size_t t) const {
        return active_[t][country] != 0;
    }

private:
    CountryRegistry countries_;
    ProductRegistry products_;
    int first_year_;
    int digit_level_;
    std::vector<Matrix<double>> slices_;
    std::vector<std::vector<std::uint8_t>> active_;
};

/// GDP per capita per (country, year). Absent country-years are NaN.
class GdpPanel {
public:
    GdpPanel(CountryRegistry countries, int first_year, Matrix<double> gdp);

    const CountryRegistry& countries() const noexcept { return countries_; }
    int first_year() const noexcept { return first_year_; }
    int last_year() const noexcept { return first_year_ + static_cast<int>(gdp_.cols()) - 1; }
    std::size_t year_count() const noexcept { return gdp_.cols(); }

    bool has(std::string_view country, int year) const;
    /// GDP per capita; throws when absent.
    double value(std::string_view country, int year) const;
    const Matrix<double>& table() const noexcept { return gdp_; }

private:
    CountryRegistry countries_;
    int first_year_;
    Matrix<double> gdp_;
};

/// Export-panel countries lacking GDP, per year and overall.
struct GdpCoverage {
    std::vector<std::string> missing_everywhere;
    std::vector<std::pair<int, std::string>> missing_country_years;
    bool complete() const noexcept { return missing_country_years.empty(); }
};

GdpCoverage gdp_coverage(const ExportPanel& exports, const GdpPanel& gdp);

/// Reads `year,country,product,value`; product codes are truncated to
/// `digit_level` digits and values of merged codes summed.
ExportPanel load_export_csv(const std::filesystem::path& path, int digit_level);
ExportPanel parse_export_csv(std::istream& in, int digit_level, const std::string& source = "<stream>");
/// Writes nonzero cells ordered by year, country, product.
void write_export_csv(const ExportPanel& panel, std::ostream& out);

/// Re-aggregates a panel to a coarser digit level.
ExportPanel aggregate_digits(const ExportPanel& panel, int digit_level);

GdpPanel load_gdp_csv(const std::filesystem::path& path);
GdpPanel parse_gdp_csv(std::istream& in, const std::string& source = "<stream>");
void write_gdp_csv(const GdpPanel& panel, std::ostream& out);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

}  // namespace ecx
