#pragma once

#include <string>
#include <vector>

#include "ecx/matrix.hpp"
#include "ecx/plane.hpp"

namespace ecx::svg {

/// Arrows at the centres of populated cells, scaled so the longest spans
/// 0.9 cells. An optional line (one ordinate per column, NaN for gaps) is
/// overlaid.
std::string quiver(const PlaneField& v_field, const std::string& title,
                   const std::vector<double>& overlay = {});

/// Cell colours for the finite entries of `values` (indexed ix, iy on
/// `grid`). Non-finite cells are left blank.
std::string heatmap(const Matrix<double>& values, const GridSpec& grid, const std::string& title);

/// Vertical bars, one per label.
std::string bars(const std::vector<std::string>& labels, const std::vector<double>& values, const std::string& title,
                 const std::string& y_label);

}  // namespace ecx::svg
