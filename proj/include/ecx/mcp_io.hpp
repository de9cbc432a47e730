#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ecx/metrics.hpp"
#include "ecx/registry.hpp"

namespace ecx {

/// Binary matrices for consecutive years sharing one pair of registries.
struct McpSeries {
    CountryRegistry countries;
    ProductRegistry products;
    int first_year = 0;
    std::vector<BinaryExportMatrix> years;
};

/// Sparse `year,country,product` rows for the ones, plus a JSON sidecar
/// holding the registries, first year, year count and provenance.
void write_mcp(const McpSeries& series, const std::filesystem::path& csv_path);
McpSeries load_mcp(const std::filesystem::path& csv_path);

/// Sidecar path used for `csv_path`.
std::filesystem::path mcp_sidecar(const std::filesystem::path& csv_path);

}  // namespace ecx
