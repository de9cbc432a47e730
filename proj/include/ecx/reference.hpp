#pragma once

// Single-threaded versions of the parallel kernels. They follow the same
// arithmetic order where the parallel kernel is deterministic, and serve as
// the baseline for equivalence tests and benchmarks.

#include <span>
#include <vector>

#include "ecx/forecast.hpp"
#include "ecx/matrix.hpp"
#include "ecx/metrics.hpp"
#include "ecx/plane.hpp"

namespace ecx::reference {

Matrix<double> rca(const Matrix<double>& exports);
FitnessComplexity fitness_complexity(const BinaryMatrix& mcp, const FcOptions& options = {});
double nodf(const BinaryMatrix& m);
std::vector<ForecastResult> nwkr(std::span<const Vec2> queries, const AnalogueSet& set, double sigma);
/// Per-cell displacement sums and counts, cell index ix * ny + iy.
struct Binned {
    std::vector<double> sum_dx, sum_dy;
    std::vector<std::size_t> count;
};
Binned bin_displacements(std::span<const Displacement> samples, const GridSpec& grid);

}  // namespace ecx::reference
