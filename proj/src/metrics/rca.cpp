#include <cmath>
#include <ostream>

#include "ecx/error.hpp"
#include "ecx/metrics.hpp"

namespace ecx {

RcaMatrix compute_rca(const Matrix<double>& exports) {
    const std::size_t nc = exports.rows(), np = exports.cols();
    std::vector<double> row_total(nc, 0.0), col_total(np, 0.0);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nc); ++c) {
        double s = 0.0;
        for (double v : exports.row(static_cast<std::size_t>(c))) s += v;
        row_total[static_cast<std::size_t>(c)] = s;
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(np); ++p) {
        double s = 0.0;
        for (std::size_t c = 0; c < nc; ++c) s += exports(c, static_cast<std::size_t>(p));
        col_total[static_cast<std::size_t>(p)] = s;
    }
    double total = 0.0;
    for (double v : row_total) total += v;
    if (!(total > 0.0)) throw ComputationError("RCA undefined: all exports are zero");

    RcaMatrix out{Matrix<double>(nc, np, 0.0), std::vector<bool>(nc), std::vector<bool>(np)};
    for (std::size_t c = 0; c < nc; ++c) out.zero_country[c] = row_total[c] == 0.0;
    for (std::size_t p = 0; p < np; ++p) out.zero_product[p] = col_total[p] == 0.0;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(nc); ++ci) {
        const auto c = static_cast<std::size_t>(ci);
        if (row_total[c] == 0.0) continue;
        for (std::size_t p = 0; p < np; ++p) {
            if (col_total[p] == 0.0) continue;
            out.values(c, p) = (exports(c, p) / row_total[c]) / (col_total[p] / total);
        }
    }
    return out;
}

RcaMatrix compute_rca(const ExportPanel& panel, int year) { return compute_rca(panel.slice(year)); }

std::vector<RcaMatrix> compute_rca_cube(const ExportPanel& panel) {
    std::vector<RcaMatrix> cube;
    cube.reserve(panel.year_count());
    for (std::size_t t = 0; t < panel.year_count(); ++t) cube.push_back(compute_rca(panel.slice_at(t)));
    return cube;
}

std::string to_string(MatrixProvenance p) {
    return p == MatrixProvenance::Thresholded ? "thresholded" : "hmm-regularized";
}

BinaryExportMatrix threshold_mcp(const RcaMatrix& rca) {
    BinaryExportMatrix out{BinaryMatrix(rca.values.rows(), rca.values.cols(), 0), MatrixProvenance::Thresholded};
    auto src = rca.values.data();
    auto dst = out.m.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= 1.0 ? 1 : 0;
    return out;
}

NrcaWeights compute_nrca(const RcaMatrix& rca) {
    const std::size_t nc = rca.values.rows(), np = rca.values.cols();
    NrcaWeights out{Matrix<double>(nc, np, 0.0), std::vector<bool>(np, false)};
    for (std::size_t p = 0; p < np; ++p) {
        double s = 0.0;
        for (std::size_t c = 0; c < nc; ++c) s += rca.values(c, p);
        if (!(s > 0.0)) {
            out.empty_product[p] = true;
            continue;
        }
        for (std::size_t c = 0; c < nc; ++c) out.weights(c, p) = rca.values(c, p) / s;
    }
    return out;
}

LogProdyVector compute_logprody(const RcaMatrix& rca, std::span<const double> gdp_per_country) {
    const std::size_t nc = rca.values.rows(), np = rca.values.cols();
    if (gdp_per_country.size() != nc) throw ValidationError("GDP vector does not match RCA rows");
    LogProdyVector out{std::vector<double>(np, std::nan("")), std::vector<bool>(np, true), {}};
    std::vector<double> log_gdp(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        const double g = gdp_per_country[c];
        if (!std::isnan(g) && !(g > 0.0)) throw ValidationError("GDP per capita must be positive");
        log_gdp[c] = std::isnan(g) ? g : std::log10(g);
    }
    std::vector<bool> dropped(nc, false);
    for (std::size_t p = 0; p < np; ++p) {
        double wsum = 0.0, acc = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            const double w = rca.values(c, p);
            if (w <= 0.0) continue;
            if (std::isnan(log_gdp[c])) {
                dropped[c] = true;
                continue;
            }
            wsum += w;
            acc += w * log_gdp[c];
        }
        if (wsum > 0.0) {
            out.values[p] = acc / wsum;
            out.missing[p] = false;
        }
    }
    for (std::size_t c = 0; c < nc; ++c)
        if (dropped[c]) out.dropped_countries.push_back(std::to_string(c));
    return out;
}

LogProdyVector compute_logprody(const RcaMatrix& rca, const CountryRegistry& countries, const GdpPanel& gdp,
                                int year) {
    std::vector<double> g(countries.size(), std::nan(""));
    for (std::size_t c = 0; c < countries.size(); ++c)
        if (gdp.has(countries.code(c), year)) g[c] = gdp.value(countries.code(c), year);
    auto out = compute_logprody(rca, g);
    for (auto& d : out.dropped_countries) d = countries.code(std::stoul(d));
    return out;
}

HerfindahlVector compute_herfindahl(const Matrix<double>& exports) {
    const std::size_t nc = exports.rows(), np = exports.cols();
    HerfindahlVector out{std::vector<double>(np, std::nan("")), Matrix<double>(nc, np, 0.0),
                         std::vector<bool>(np, false)};
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(np); ++pi) {
        const auto p = static_cast<std::size_t>(pi);
        double world = 0.0;
        for (std::size_t c = 0; c < nc; ++c) world += exports(c, p);
        if (!(world > 0.0)) {
            out.missing[p] = true;
            continue;
        }
        double h = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            const double s = exports(c, p) / world;
            out.shares(c, p) = s;
            h += s * s;
        }
        out.values[p] = h;
    }
    return out;
}

HerfindahlVector compute_herfindahl(const ExportPanel& panel, int year) {
    return compute_herfindahl(panel.slice(year));
}

void write_metric_csv(std::ostream& out, int year, std::span<const std::string> entities,
                      std::span<const double> values, bool header) {
    if (header) out << "year,entity,value\n";
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isnan(values[i])) out << year << ',' << entities[i] << ',' << format_double(values[i]) << '\n';
}

}  // namespace ecx
