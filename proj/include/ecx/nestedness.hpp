#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecx/matrix.hpp"

namespace ecx {

struct NodfResult {
    double nodf = 0.0;
    /// Mean paired nestedness over row pairs and over column pairs.
    double row_part = 0.0;
    double column_part = 0.0;
    std::size_t row_pairs = 0;
    std::size_t column_pairs = 0;
};

/// Nestedness by overlap and decreasing fill, in [0, 100].
/// Throws ValidationError for matrices smaller than 2x2.
NodfResult nodf(const BinaryMatrix& m);

enum class NullModel { EE, DD, FF };
std::string to_string(NullModel model);
NullModel parse_null_model(const std::string& name);

struct NullEnsemble {
    NullModel model = NullModel::EE;
    std::vector<double> values;
    double mean = 0.0;
    double sd = 0.0;
    /// FF only: no 2x2 checkerboard exists, every replicate equals the input.
    bool degenerate = false;
    /// FF only: lag-1 autocorrelation of NODF along one curveball chain
    /// sampled every burn-in interval. NaN when the chain is constant.
    double mixing_autocorrelation = 0.0;
    std::vector<std::string> warnings;
};

/// Replicate r uses substream(seed, {r}); results do not depend on the
/// worker count.
NullEnsemble null_ensemble(const BinaryMatrix& m, NullModel model, std::size_t count, std::uint64_t seed);

/// One replicate of the given null model.
BinaryMatrix null_replicate(const BinaryMatrix& m, NullModel model, std::uint64_t seed, std::uint64_t replicate);

/// Curveball trades applied in place; returns the number of trades that
/// changed the matrix.
std::size_t curveball(BinaryMatrix& m, std::size_t trades, std::uint64_t seed, std::uint64_t stream);

/// True when some pair of rows has columns each lacks from the other.
bool has_checkerboard(const BinaryMatrix& m);

struct SignificanceReport {
    std::string model;
    double observed = 0.0;
    double null_mean = 0.0;
    double null_sd = 0.0;
    /// null_mean / observed and null_sd / observed.
    double mean_ratio = 0.0;
    double sd_ratio = 0.0;
    /// Absent for a zero-variance ensemble.
    std::optional<double> z;
    /// Fraction of replicates with NODF <= observed.
    double quantile = 0.0;
    std::size_t replicates = 0;
    bool degenerate = false;
};

/// Throws ValidationError for ensembles with fewer than 30 replicates.
SignificanceReport significance(const NodfResult& observed, const NullEnsemble& ensemble);
nlohmann::json to_json(const SignificanceReport& report);

/// `replicate,model,nodf` rows.
void write_replicates_csv(std::ostream& out, const NullEnsemble& ensemble);

}  // namespace ecx
