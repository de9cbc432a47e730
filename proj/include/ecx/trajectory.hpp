#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ecx {

/// Position of one entity (product or country) on a two-dimensional plane in one year.
struct PlanePoint {
    std::size_t entity = 0;
    int year = 0;
    double x = 0.0;
    double y = 0.0;
};

/// Scalar attached to an entity-year, e.g. the Herfindahl index of a product.
struct ScalarSample {
    std::size_t entity = 0;
    int year = 0;
    double value = 0.0;
};

struct TrajectorySet {
    std::vector<std::string> entities;
    std::vector<PlanePoint> points;
    /// Optional per-point scalar (empty when absent).
    std::vector<ScalarSample> scalars;
};

/// `entity,year,x,y,h`; h may be empty.
void write_trajectories_csv(const TrajectorySet& set, std::ostream& out);
TrajectorySet parse_trajectories_csv(std::istream& in, const std::string& source = "<stream>");
TrajectorySet load_trajectories_csv(const std::filesystem::path& path);

}  // namespace ecx
