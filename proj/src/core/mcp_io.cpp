#include "ecx/mcp_io.hpp"

#include <fstream>

#include <json.hpp>

#include "ecx/csv.hpp"
#include "ecx/error.hpp"

namespace ecx {

std::filesystem::path mcp_sidecar(const std::filesystem::path& csv_path) {
    auto p = csv_path;
    p.replace_extension(".json");
    return p;
}

void write_mcp(const McpSeries& s, const std::filesystem::path& csv_path) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw InputError("cannot write " + csv_path.string());
    out << "year,country,product\n";
    for (std::size_t t = 0; t < s.years.size(); ++t) {
        const auto& m = s.years[t].m;
        for (std::size_t c = 0; c < m.rows(); ++c)
            for (std::size_t p = 0; p < m.cols(); ++p)
                if (m(c, p)) out << s.first_year + static_cast<int>(t) << ',' << s.countries.code(c) << ',' << s.products.code(p) << '\n';
    }
    nlohmann::json j;
    j["countries"] = std::vector<std::string>(s.countries.codes().begin(), s.countries.codes().end());
    j["products"] = std::vector<std::string>(s.products.codes().begin(), s.products.codes().end());
    j["first_year"] = s.first_year;
    j["years"] = s.years.size();
    j["provenance"] = s.years.empty() ? "thresholded" : to_string(s.years.front().provenance);
    std::ofstream side(mcp_sidecar(csv_path), std::ios::binary);
    if (!side) throw InputError("cannot write " + mcp_sidecar(csv_path).string());
    side << j.dump(2) << '\n';
}

McpSeries load_mcp(const std::filesystem::path& csv_path) {
    const auto side_path = mcp_sidecar(csv_path);
    std::ifstream side(side_path);
    if (!side) throw InputError("cannot open matrix sidecar " + side_path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(side);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(side_path.string() + ": " + e.what());
    }
    McpSeries s;
    MatrixProvenance provenance = MatrixProvenance::Thresholded;
    std::size_t year_count = 0;
    try {
        s.countries = CountryRegistry::from_codes(j.at("countries").get<std::vector<std::string>>());
        s.products = ProductRegistry::from_codes(j.at("products").get<std::vector<std::string>>());
        s.first_year = j.at("first_year").get<int>();
        year_count = j.at("years").get<std::size_t>();
        const auto prov = j.at("provenance").get<std::string>();
        if (prov == to_string(MatrixProvenance::HmmRegularized)) provenance = MatrixProvenance::HmmRegularized;
        else if (prov != to_string(MatrixProvenance::Thresholded))
            throw ValidationError("unknown provenance '" + prov + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(side_path.string() + ": " + e.what());
    }
    for (std::size_t t = 0; t < year_count; ++t)
        s.years.push_back({BinaryMatrix(s.countries.size(), s.products.size(), 0), provenance});

    std::ifstream in(csv_path);
    if (!in) throw InputError("cannot open " + csv_path.string());
    CsvReader reader(in, csv_path.string());
    reader.expect_header({"year", "country", "product"});
    std::vector<std::string> f;
    while (reader.next(f)) {
        reader.require_fields(f, 3);
        const int year = parse_int(f[0], reader.source(), reader.line());
        if (year < s.first_year || year >= s.first_year + static_cast<int>(year_count))
            throw ParseError(reader.source(), reader.line(), "year " + f[0] + " outside the declared range");
        const auto c = s.countries.find(f[1]);
        const auto p = s.products.find(f[2]);
        if (!c || !p) throw ParseError(reader.source(), reader.line(), "unknown country or product");
        s.years[static_cast<std::size_t>(year - s.first_year)].m(*c, *p) = 1;
    }
    return s;
}

}  // namespace ecx
