#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecx/matrix.hpp"
#include "ecx/trajectory.hpp"

namespace ecx {

enum class CoordinateConvention { TiedRank, Raw };
std::string to_string(CoordinateConvention c);
CoordinateConvention parse_coordinate_convention(const std::string& name);

/// Square-cell grid over a rectangle. The upper edges are inclusive.
struct GridSpec {
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;
    std::size_t nx = 20, ny = 20;
    /// Cells with fewer samples are masked.
    std::size_t min_count = 5;

    double cell_width() const { return (x_max - x_min) / static_cast<double>(nx); }
    double cell_height() const { return (y_max - y_min) / static_cast<double>(ny); }
    double center_x(std::size_t ix) const { return x_min + (static_cast<double>(ix) + 0.5) * cell_width(); }
    double center_y(std::size_t iy) const { return y_min + (static_cast<double>(iy) + 0.5) * cell_height(); }
    std::optional<std::pair<std::size_t, std::size_t>> cell_of(double x, double y) const;
    void validate() const;
    bool operator==(const GridSpec&) const = default;
};

/// Bounding box of the points with nx by ny cells, padded by 1e-9 of the span.
GridSpec covering_grid(std::span<const PlanePoint> points, std::size_t nx, std::size_t ny, std::size_t min_count);

/// Per-year x and y metric vectors (NaN = missing) to plane points. Under
/// TiedRank each coordinate is the tied rank among the entities present in
/// that year, scaled to [0, 1].
std::vector<PlanePoint> plane_points(const std::vector<std::vector<double>>& x_by_year,
                                     const std::vector<std::vector<double>>& y_by_year, int first_year,
                                     CoordinateConvention convention);

/// Displacement from year t to t+1, located at the year-t position.
struct Displacement {
    double x = 0.0, y = 0.0;
    double dx = 0.0, dy = 0.0;
};

struct PositionedValue {
    double x = 0.0, y = 0.0;
    double value = 0.0;
};

/// Throws ValidationError when the points span fewer than 2 years.
std::vector<Displacement> displacements(std::span<const PlanePoint> points);
/// Joins scalars to points by (entity, year). Throws ValidationError unless
/// both sets carry exactly the same keys.
std::vector<PositionedValue> join_scalars(std::span<const PlanePoint> points, std::span<const ScalarSample> scalars);

/// Cell arrays are indexed (ix, iy); masked cells hold NaN.
struct PlaneField {
    GridSpec grid;
    Matrix<double> vx, vy;
    Matrix<double> h;
    Matrix<std::size_t> count;

    bool populated(std::size_t ix, std::size_t iy) const { return count(ix, iy) >= grid.min_count; }
    std::size_t populated_cells() const;
};

PlaneField build_velocity_field(std::span<const Displacement> samples, const GridSpec& grid);
PlaneField build_velocity_field(std::span<const PlanePoint> points, const GridSpec& grid);
PlaneField build_h_field(std::span<const PositionedValue> samples, const GridSpec& grid);
PlaneField build_h_field(std::span<const PlanePoint> points, std::span<const ScalarSample> h, const GridSpec& grid);

/// Finite-difference gradient of the H field in plane units: central where
/// both neighbours are populated, one-sided otherwise, NaN when neither is.
struct FieldGradient {
    Matrix<double> dx, dy;
};
FieldGradient gradient(const PlaneField& h_field);

struct AxisFit {
    double k = 0.0;
    double r_squared = 0.0;
    std::vector<double> residuals;
};

struct FieldModelFit {
    AxisFit x, y;
    std::size_t cells = 0;
};

/// Least squares through the origin of v_x on -dH/dx and of v_y on -dH/dy
/// over cells populated in both fields. R^2 = 1 - SS_res / SS_tot with the
/// centred total sum of squares.
FieldModelFit fit_gradient_model(const PlaneField& v_field, const PlaneField& h_field);

enum class MinimaTarget { VerticalVelocity, HField };

struct MinimaLine {
    MinimaTarget target = MinimaTarget::HField;
    /// Per column; NaN marks a fully masked column.
    std::vector<double> raw;
    std::vector<double> smoothed;
    std::vector<double> standard_error;
    double bandwidth = 0.0;
    std::size_t bootstrap_count = 0;
    /// A single resample gives no spread; errors are reported as zero.
    bool degenerate = false;
};

/// Ordinate of the smallest |v_y| per grid column.
MinimaLine minima_line(std::span<const Displacement> samples, const GridSpec& grid, std::size_t bootstrap_count,
                       std::uint64_t seed);
/// Ordinate of the smallest H per grid column.
MinimaLine minima_line(std::span<const PositionedValue> samples, const GridSpec& grid, std::size_t bootstrap_count,
                       std::uint64_t seed);

/// `cellX,cellY,vx,vy,H,count`; masked values are empty, count is the
/// velocity sample count.
void write_grid_csv(std::ostream& out, const PlaneField& v_field, const PlaneField& h_field);
/// `column,x,raw,smoothed,se`.
void write_minima_csv(std::ostream& out, const MinimaLine& line, const GridSpec& grid);

}  // namespace ecx
