#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecx/matrix.hpp"
#include "ecx/panel.hpp"

namespace ecx {

/// Balassa index for one year. Countries (rows) or products (columns) with
/// zero total export are left at 0 and flagged.
struct RcaMatrix {
    Matrix<double> values;
    std::vector<bool> zero_country;
    std::vector<bool> zero_product;
};

RcaMatrix compute_rca(const Matrix<double>& exports);
RcaMatrix compute_rca(const ExportPanel& panel, int year);
/// RCA for every year of the panel.
std::vector<RcaMatrix> compute_rca_cube(const ExportPanel& panel);

enum class MatrixProvenance { Thresholded, HmmRegularized };
std::string to_string(MatrixProvenance p);

struct BinaryExportMatrix {
    BinaryMatrix m;
    MatrixProvenance provenance = MatrixProvenance::Thresholded;
};

/// M_cp = 1 iff RCA_cp >= 1.
BinaryExportMatrix threshold_mcp(const RcaMatrix& rca);

struct FcOptions {
    double tolerance = 1e-13;
    std::size_t max_iterations = 1000;
    /// Consecutive iterations with an unchanged ranking required to stop.
    std::size_t stable_rank_iterations = 10;
};

struct FitnessComplexity {
    std::vector<double> fitness;
    std::vector<double> complexity;
    /// Un-normalized iterates of the last step, F~ = M C(n-1) and C~.
    std::vector<double> raw_fitness;
    std::vector<double> raw_complexity;
    std::size_t iterations = 0;
    /// Value criterion and ranking criterion both met.
    bool converged = false;
    /// Rankings unchanged over the last stable_rank_iterations steps.
    bool rank_stable = false;
};

/// Fitness-Complexity fixed-point map started from F = C = 1.
/// Throws StructuralError naming the first empty row or column.
FitnessComplexity fitness_complexity(const BinaryMatrix& mcp, const FcOptions& options = {});

/// Same map from an arbitrary positive starting point.
FitnessComplexity fitness_complexity(const BinaryMatrix& mcp, std::span<const double> initial_fitness,
                                     std::span<const double> initial_complexity, const FcOptions& options = {});

/// Repeatedly removes empty rows and columns. Indices refer to the input matrix.
struct PrunedMatrix {
    BinaryMatrix m;
    std::vector<std::size_t> kept_rows;
    std::vector<std::size_t> kept_cols;
};
PrunedMatrix prune_empty(const BinaryMatrix& mcp);

/// Prunes empty rows/columns, runs the map and scatters results back; removed entries get 0.
FitnessComplexity fitness_complexity_pruned(const BinaryMatrix& mcp, const FcOptions& options = {});

/// nRCA_cp = RCA_cp / sum_j RCA_jp. Columns with zero sum are flagged and left at 0.
struct NrcaWeights {
    Matrix<double> weights;
    std::vector<bool> empty_product;
};
NrcaWeights compute_nrca(const RcaMatrix& rca);

struct LogProdyVector {
    /// NaN where the product has no exporter with known GDP.
    std::vector<double> values;
    std::vector<bool> missing;
    /// Exporters dropped for lack of GDP (weights renormalized without them).
    std::vector<std::string> dropped_countries;
};

/// logPRODY_p = sum_c nRCA_cp log10(GDP_c) over exporters with GDP in `year`.
LogProdyVector compute_logprody(const RcaMatrix& rca, const CountryRegistry& countries, const GdpPanel& gdp,
                                int year);
/// Core formula on aligned inputs; NaN GDP entries are dropped and the column renormalized.
LogProdyVector compute_logprody(const RcaMatrix& rca, std::span<const double> gdp_per_country);

struct HerfindahlVector {
    std::vector<double> values;
    Matrix<double> shares;
    /// Products with zero world export; value is NaN.
    std::vector<bool> missing;
};

HerfindahlVector compute_herfindahl(const Matrix<double>& exports);
HerfindahlVector compute_herfindahl(const ExportPanel& panel, int year);

/// `year,entity,value` rows; NaN values are skipped.
void write_metric_csv(std::ostream& out, int year, std::span<const std::string> entities,
                      std::span<const double> values, bool header);

}  // namespace ecx
