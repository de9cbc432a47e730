#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <type_traits>

#include "ecx/error.hpp"
#include "ecx/panel.hpp"
#include "ecx/plane.hpp"
#include "ecx/random.hpp"
#include "ecx/stats.hpp"

namespace ecx {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Derivative along one axis at index i of a line of n cells.
template <class At>
double difference(std::size_t i, std::size_t n, double step, At at) {
    const double here = at(i);
    if (!std::isfinite(here)) return kNaN;
    const double prev = i > 0 ? at(i - 1) : kNaN;
    const double next = i + 1 < n ? at(i + 1) : kNaN;
    if (std::isfinite(prev) && std::isfinite(next)) return (next - prev) / (2.0 * step);
    if (std::isfinite(next)) return (next - here) / step;
    if (std::isfinite(prev)) return (here - prev) / step;
    return kNaN;
}

AxisFit through_origin(const std::vector<double>& predictor, const std::vector<double>& response) {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < predictor.size(); ++i) {
        sxy += predictor[i] * response[i];
        sxx += predictor[i] * predictor[i];
    }
    if (sxx == 0.0) throw ComputationError("H field has zero gradient on every shared cell");
    AxisFit fit;
    fit.k = sxy / sxx;
    const double mu = stats::mean(response);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < predictor.size(); ++i) {
        const double r = response[i] - fit.k * predictor[i];
        fit.residuals.push_back(r);
        ss_res += r * r;
        ss_tot += (response[i] - mu) * (response[i] - mu);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
    return fit;
}

std::vector<double> column_minima(const PlaneField& f, MinimaTarget target) {
    std::vector<double> out(f.grid.nx, kNaN);
    for (std::size_t i = 0; i < f.grid.nx; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < f.grid.ny; ++j) {
            const double v = target == MinimaTarget::HField ? f.h(i, j) : std::fabs(f.vy(i, j));
            if (std::isfinite(v) && v < best) {
                best = v;
                out[i] = f.grid.center_y(j);
            }
        }
    }
    return out;
}

std::vector<double> smooth(const std::vector<double>& raw, double bandwidth) {
    std::vector<double> out(raw.size(), kNaN);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) continue;
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < raw.size(); ++j) {
            if (!std::isfinite(raw[j])) continue;
            const double u = (static_cast<double>(i) - static_cast<double>(j)) / bandwidth;
            const double w = std::exp(-0.5 * u * u);
            num += w * raw[j];
            den += w;
        }
        out[i] = num / den;
    }
    return out;
}

template <class Sample>
MinimaLine minima(std::span<const Sample> samples, const GridSpec& grid, std::size_t bootstrap_count,
                  std::uint64_t seed, MinimaTarget target) {
    if (bootstrap_count == 0) throw ValidationError("bootstrap count must be at least 1");
    auto build = [&](std::span<const Sample> s) {
        if constexpr (std::is_same_v<Sample, Displacement>) return build_velocity_field(s, grid);
        else return build_h_field(s, grid);
    };
    MinimaLine line;
    line.target = target;
    line.bootstrap_count = bootstrap_count;
    line.raw = column_minima(build(samples), target);
    std::vector<double> columns;
    for (std::size_t i = 0; i < line.raw.size(); ++i)
        if (std::isfinite(line.raw[i])) columns.push_back(static_cast<double>(i));
    if (columns.empty()) throw ComputationError("every grid column is masked");
    line.bandwidth = stats::silverman_bandwidth(columns);
    line.smoothed = smooth(line.raw, line.bandwidth);

    std::vector<std::vector<double>> boot(bootstrap_count);
    const auto n = samples.size();
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(bootstrap_count); ++b) {
        auto rng = substream(seed, {static_cast<std::uint64_t>(b)});
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<Sample> resample(n);
        for (auto& s : resample) s = samples[pick(rng)];
        boot[static_cast<std::size_t>(b)] = smooth(column_minima(build(resample), target), line.bandwidth);
    }
    line.degenerate = bootstrap_count < 2;
    line.standard_error.assign(line.raw.size(), kNaN);
    for (std::size_t i = 0; i < line.raw.size(); ++i) {
        if (!std::isfinite(line.raw[i])) continue;
        std::vector<double> v;
        for (const auto& r : boot)
            if (std::isfinite(r[i])) v.push_back(r[i]);
        line.standard_error[i] = v.size() >= 2 ? stats::sample_sd(v) : 0.0;
    }
    return line;
}

}  // namespace

FieldGradient gradient(const PlaneField& f) {
    const auto& g = f.grid;
    FieldGradient out{Matrix<double>(g.nx, g.ny, kNaN), Matrix<double>(g.nx, g.ny, kNaN)};
    for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) {
            out.dx(i, j) = difference(i, g.nx, g.cell_width(), [&](std::size_t k) { return f.h(k, j); });
            out.dy(i, j) = difference(j, g.ny, g.cell_height(), [&](std::size_t k) { return f.h(i, k); });
        }
    return out;
}

FieldModelFit fit_gradient_model(const PlaneField& v, const PlaneField& h) {
    if (!(v.grid == h.grid)) throw ValidationError("velocity and H fields use different grids");
    const auto grad = gradient(h);
    std::vector<double> gx, gy, vx, vy;
    for (std::size_t i = 0; i < v.grid.nx; ++i)
        for (std::size_t j = 0; j < v.grid.ny; ++j) {
            if (!std::isfinite(v.vx(i, j)) || !std::isfinite(v.vy(i, j))) continue;
            if (!std::isfinite(grad.dx(i, j)) || !std::isfinite(grad.dy(i, j))) continue;
            gx.push_back(-grad.dx(i, j));
            gy.push_back(-grad.dy(i, j));
            vx.push_back(v.vx(i, j));
            vy.push_back(v.vy(i, j));
        }
    if (gx.size() < 3) throw ComputationError("fewer than 3 cells populated in both fields");
    FieldModelFit fit;
    fit.cells = gx.size();
    fit.x = through_origin(gx, vx);
    fit.y = through_origin(gy, vy);
    return fit;
}

MinimaLine minima_line(std::span<const Displacement> samples, const GridSpec& grid, std::size_t bootstrap_count,
                       std::uint64_t seed) {
    return minima(samples, grid, bootstrap_count, seed, MinimaTarget::VerticalVelocity);
}

MinimaLine minima_line(std::span<const PositionedValue> samples, const GridSpec& grid, std::size_t bootstrap_count,
                       std::uint64_t seed) {
    return minima(samples, grid, bootstrap_count, seed, MinimaTarget::HField);
}

void write_minima_csv(std::ostream& out, const MinimaLine& line, const GridSpec& grid) {
    auto cell = [](double x) { return std::isfinite(x) ? format_double(x) : std::string(); };
    out << "column,x,raw,smoothed,se\n";
    for (std::size_t i = 0; i < line.raw.size(); ++i)
        out << i << ',' << format_double(grid.center_x(i)) << ',' << cell(line.raw[i]) << ',' << cell(line.smoothed[i])
            << ',' << cell(line.standard_error[i]) << '\n';
}

}  // namespace ecx
