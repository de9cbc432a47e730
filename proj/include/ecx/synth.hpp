#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecx/matrix.hpp"
#include "ecx/panel.hpp"
#include "ecx/trajectory.hpp"

namespace ecx {

/// Parameters of the synthetic fixture generators.
///
///  - `nested`: stairstep Mcp (country c exports the first products, fewer
///    as c grows), each cell flipped with probability `noise` per year.
///  - `flicker`: RCA designed around 1 on a near-nested pattern; log-RCA
///    noise is scaled so that a cell at the design margin lands on the wrong
///    side of the threshold with probability `noise`. A fraction of
///    countries gain the product after their frontier at `switch_year` (one true
///    regime change per affected cell).
///  - `drift`: plane trajectories, Brownian motion plus a drift field
///    (`none`, `constant`, or `bowl`, the latter being -k grad H for a
///    quadratic H whose per-column minimum lies on a tilted line).
struct SynthSpec {
    std::string generator = "nested";
    std::size_t countries = 20;
    std::size_t products = 30;
    std::size_t years = 20;
    int first_year = 2000;
    double noise = 0.0;

    // flicker
    /// Year index (0-based) of the regime change; negative disables it.
    int switch_year = 10;
    double switch_fraction = 0.25;
    /// Design margin in log-RCA units.
    double margin = 0.3;
    /// Fraction of rows and columns cut from the diversified/ubiquitous corner.
    double corner = 0.5;

    // drift
    std::string field = "bowl";
    double drift_x = 0.0;
    double drift_y = 0.0;
    /// Gradient-model coefficient k of the bowl field.
    double strength = 0.05;
    /// Curvature of the bowl H.
    double curvature = 1.0;
    /// Slope of the line of H minima, y0(x) = 1 + tilt (x - 1).
    double tilt = 0.2;
    double diffusion = 0.0;
    /// Noise added to recorded H values.
    double h_noise = 0.0;

    /// Sets a field from its textual key (used by the CLI); throws on unknown keys.
    void set(const std::string& key, const std::string& value);
    nlohmann::json to_json() const;
};

struct SynthPanel {
    std::optional<ExportPanel> exports;
    std::optional<GdpPanel> gdp;
    /// Noise-free binary matrices per year (nested and flicker generators).
    std::vector<BinaryMatrix> truth;
    /// Noisy matrices emitted by the nested generator.
    std::vector<BinaryMatrix> mcp;
    /// Regime-change year index per country for flicker (-1 when unchanged).
    std::vector<int> switched_countries;
    std::optional<TrajectorySet> trajectories;
    nlohmann::json provenance;
};

/// Deterministic for a fixed (spec, seed).
SynthPanel synth_panel(const SynthSpec& spec, std::uint64_t seed);

/// Stairstep matrix: row c holds the first ceil((rows - c) cols / rows) ones.
BinaryMatrix stairstep(std::size_t rows, std::size_t cols);

/// Positive matrix with all row sums equal to `cols` and column sums equal to
/// `rows` (so its RCA equals itself), with log values >= margin on pattern
/// cells and <= -margin elsewhere. Throws ComputationError when infeasible.
Matrix<double> balanced_design(const BinaryMatrix& pattern, double margin);

}  // namespace ecx
