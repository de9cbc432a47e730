#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "ecx/error.hpp"
#include "ecx/panel.hpp"
#include "ecx/parallel.hpp"
#include "ecx/plane.hpp"
#include "ecx/stats.hpp"

namespace ecx {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CellSums {
    std::vector<double> sums;  // cells * width
    std::vector<std::size_t> counts;
};

// Sums `width` values per cell. Chunk partials are merged in chunk order.
template <class Sample, class Values>
CellSums bin(std::span<const Sample> samples, const GridSpec& grid, std::size_t width, Values values) {
    const std::size_t cells = grid.nx * grid.ny;
    const auto chunks = parallel::chunk_ranges(samples.size());
    std::vector<CellSums> partial(chunks.size());
    bool outside = false;
#pragma omp parallel for schedule(static) reduction(|| : outside)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(chunks.size()); ++k) {
        auto& local = partial[static_cast<std::size_t>(k)];
        local.sums.assign(cells * width, 0.0);
        local.counts.assign(cells, 0);
        double buf[4] = {};
        for (std::size_t i = chunks[static_cast<std::size_t>(k)].first; i < chunks[static_cast<std::size_t>(k)].second; ++i) {
            const auto& s = samples[i];
            const auto cell = grid.cell_of(s.x, s.y);
            if (!cell) {
                outside = true;
                continue;
            }
            const std::size_t idx = cell->first * grid.ny + cell->second;
            values(s, buf);
            for (std::size_t w = 0; w < width; ++w) local.sums[idx * width + w] += buf[w];
            ++local.counts[idx];
        }
    }
    if (outside) throw ValidationError("sample lies outside the grid extents");
    CellSums total{std::vector<double>(cells * width, 0.0), std::vector<std::size_t>(cells, 0)};
    for (const auto& p : partial) {
        for (std::size_t i = 0; i < total.sums.size(); ++i) total.sums[i] += p.sums[i];
        for (std::size_t i = 0; i < cells; ++i) total.counts[i] += p.counts[i];
    }
    return total;
}

PlaneField empty_field(const GridSpec& grid) {
    grid.validate();
    PlaneField f;
    f.grid = grid;
    f.vx = Matrix<double>(grid.nx, grid.ny, kNaN);
    f.vy = Matrix<double>(grid.nx, grid.ny, kNaN);
    f.h = Matrix<double>(grid.nx, grid.ny, kNaN);
    f.count = Matrix<std::size_t>(grid.nx, grid.ny, 0);
    return f;
}

}  // namespace

std::string to_string(CoordinateConvention c) { return c == CoordinateConvention::TiedRank ? "tied-rank" : "raw"; }

CoordinateConvention parse_coordinate_convention(const std::string& name) {
    if (name == "tied-rank") return CoordinateConvention::TiedRank;
    if (name == "raw") return CoordinateConvention::Raw;
    throw ValidationError("unknown coordinate convention '" + name + "' (tied-rank|raw)");
}

void GridSpec::validate() const {
    if (nx == 0 || ny == 0) throw ValidationError("grid needs at least one cell per axis");
    if (!(x_max > x_min) || !(y_max > y_min) || !std::isfinite(x_max - x_min) || !std::isfinite(y_max - y_min))
        throw ValidationError("grid extents must be finite and non-empty");
    if (min_count == 0) throw ValidationError("grid min_count must be at least 1");
}

std::optional<std::pair<std::size_t, std::size_t>> GridSpec::cell_of(double x, double y) const {
    if (!(x >= x_min && x <= x_max && y >= y_min && y <= y_max)) return std::nullopt;
    auto ix = static_cast<std::size_t>((x - x_min) / cell_width());
    auto iy = static_cast<std::size_t>((y - y_min) / cell_height());
    return std::pair{std::min(ix, nx - 1), std::min(iy, ny - 1)};
}

GridSpec covering_grid(std::span<const PlanePoint> points, std::size_t nx, std::size_t ny, std::size_t min_count) {
    if (points.empty()) throw ValidationError("no points to cover");
    GridSpec g;
    g.nx = nx;
    g.ny = ny;
    g.min_count = min_count;
    g.x_min = g.y_min = std::numeric_limits<double>::infinity();
    g.x_max = g.y_max = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
        g.x_min = std::min(g.x_min, p.x);
        g.x_max = std::max(g.x_max, p.x);
        g.y_min = std::min(g.y_min, p.y);
        g.y_max = std::max(g.y_max, p.y);
    }
    const double px = std::max(1e-9 * (g.x_max - g.x_min), 1e-12), py = std::max(1e-9 * (g.y_max - g.y_min), 1e-12);
    g.x_min -= px;
    g.x_max += px;
    g.y_min -= py;
    g.y_max += py;
    g.validate();
    return g;
}

std::vector<PlanePoint> plane_points(const std::vector<std::vector<double>>& x_by_year,
                                     const std::vector<std::vector<double>>& y_by_year, int first_year,
                                     CoordinateConvention convention) {
    if (x_by_year.size() != y_by_year.size()) throw ValidationError("x and y series cover different years");
    std::vector<PlanePoint> out;
    for (std::size_t t = 0; t < x_by_year.size(); ++t) {
        const auto& xs = x_by_year[t];
        const auto& ys = y_by_year[t];
        if (xs.size() != ys.size()) throw ValidationError("x and y series have different entity counts");
        std::vector<std::size_t> present;
        std::vector<double> px, py;
        for (std::size_t e = 0; e < xs.size(); ++e) {
            if (!std::isfinite(xs[e]) || !std::isfinite(ys[e])) continue;
            present.push_back(e);
            px.push_back(xs[e]);
            py.push_back(ys[e]);
        }
        if (convention == CoordinateConvention::TiedRank) {
            const double scale = present.size() > 1 ? 1.0 / static_cast<double>(present.size() - 1) : 0.0;
            auto rx = stats::tied_rank(px), ry = stats::tied_rank(py);
            for (std::size_t i = 0; i < present.size(); ++i) {
                px[i] = present.size() > 1 ? (rx[i] - 1.0) * scale : 0.5;
                py[i] = present.size() > 1 ? (ry[i] - 1.0) * scale : 0.5;
            }
        }
        for (std::size_t i = 0; i < present.size(); ++i)
            out.push_back({present[i], first_year + static_cast<int>(t), px[i], py[i]});
    }
    return out;
}

std::vector<Displacement> displacements(std::span<const PlanePoint> points) {
    std::set<int> years;
    for (const auto& p : points) years.insert(p.year);
    if (years.size() < 2) throw ValidationError("displacements need points from at least 2 years");
    std::vector<const PlanePoint*> sorted;
    for (const auto& p : points) sorted.push_back(&p);
    std::stable_sort(sorted.begin(), sorted.end(), [](auto a, auto b) {
        return std::tie(a->entity, a->year) < std::tie(b->entity, b->year);
    });
    std::vector<Displacement> out;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const auto& a = *sorted[i];
        const auto& b = *sorted[i + 1];
        if (a.entity == b.entity && a.year == b.year)
            throw ValidationError("duplicate point for entity " + std::to_string(a.entity) + " in " + std::to_string(a.year));
        if (a.entity == b.entity && b.year == a.year + 1) out.push_back({a.x, a.y, b.x - a.x, b.y - a.y});
    }
    return out;
}

std::vector<PositionedValue> join_scalars(std::span<const PlanePoint> points, std::span<const ScalarSample> scalars) {
    std::map<std::pair<std::size_t, int>, double> value;
    for (const auto& s : scalars)
        if (!value.emplace(std::pair{s.entity, s.year}, s.value).second)
            throw ValidationError("duplicate scalar for entity " + std::to_string(s.entity));
    if (value.size() != points.size()) throw ValidationError("scalar and point ids do not match");
    std::vector<PositionedValue> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        auto it = value.find({p.entity, p.year});
        if (it == value.end())
            throw ValidationError("no scalar for entity " + std::to_string(p.entity) + " in " + std::to_string(p.year));
        out.push_back({p.x, p.y, it->second});
    }
    return out;
}

std::size_t PlaneField::populated_cells() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < grid.nx; ++i)
        for (std::size_t j = 0; j < grid.ny; ++j) n += populated(i, j) ? 1 : 0;
    return n;
}

PlaneField build_velocity_field(std::span<const Displacement> samples, const GridSpec& grid) {
    auto f = empty_field(grid);
    const auto sums = bin(samples, grid, 2, [](const Displacement& d, double* out) {
        out[0] = d.dx;
        out[1] = d.dy;
    });
    for (std::size_t i = 0; i < grid.nx; ++i)
        for (std::size_t j = 0; j < grid.ny; ++j) {
            const std::size_t idx = i * grid.ny + j;
            f.count(i, j) = sums.counts[idx];
            if (!f.populated(i, j)) continue;
            const auto n = static_cast<double>(sums.counts[idx]);
            f.vx(i, j) = sums.sums[2 * idx] / n;
            f.vy(i, j) = sums.sums[2 * idx + 1] / n;
        }
    return f;
}

PlaneField build_velocity_field(std::span<const PlanePoint> points, const GridSpec& grid) {
    const auto d = displacements(points);
    return build_velocity_field(std::span<const Displacement>(d), grid);
}

PlaneField build_h_field(std::span<const PositionedValue> samples, const GridSpec& grid) {
    auto f = empty_field(grid);
    const auto sums = bin(samples, grid, 1, [](const PositionedValue& v, double* out) { out[0] = v.value; });
    for (std::size_t i = 0; i < grid.nx; ++i)
        for (std::size_t j = 0; j < grid.ny; ++j) {
            const std::size_t idx = i * grid.ny + j;
            f.count(i, j) = sums.counts[idx];
            if (f.populated(i, j)) f.h(i, j) = sums.sums[idx] / static_cast<double>(sums.counts[idx]);
        }
    return f;
}

PlaneField build_h_field(std::span<const PlanePoint> points, std::span<const ScalarSample> h, const GridSpec& grid) {
    const auto joined = join_scalars(points, h);
    return build_h_field(std::span<const PositionedValue>(joined), grid);
}

void write_grid_csv(std::ostream& out, const PlaneField& v, const PlaneField& h) {
    if (!(v.grid == h.grid)) throw ValidationError("velocity and H fields use different grids");
    auto cell = [](double x) { return std::isfinite(x) ? format_double(x) : std::string(); };
    out << "cellX,cellY,vx,vy,H,count\n";
    for (std::size_t i = 0; i < v.grid.nx; ++i)
        for (std::size_t j = 0; j < v.grid.ny; ++j)
            out << i << ',' << j << ',' << cell(v.vx(i, j)) << ',' << cell(v.vy(i, j)) << ',' << cell(h.h(i, j)) << ','
                << v.count(i, j) << '\n';
}

}  // namespace ecx
