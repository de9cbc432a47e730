#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecx/matrix.hpp"
#include "ecx/metrics.hpp"

namespace ecx {

inline constexpr std::size_t kStageCount = 4;
using StageArray = std::array<double, kStageCount>;

struct HmmOptions {
    /// Offset inside log(RCA + delta).
    double delta = 1e-6;
    std::size_t max_iterations = 500;
    /// Stop when the log-likelihood gain of one EM step falls below this.
    double tolerance = 1e-6;
    std::size_t restarts = 3;
    double variance_floor = 1e-4;
    /// Initial self-transition probability.
    double sticky = 0.85;
    std::uint64_t seed = 0;
};

/// Four-stage Gaussian HMM on log(RCA + delta) for one country. Stages are
/// ordered by emission mean, so stage 4 is the strongest advantage.
struct HmmModel {
    std::string country;
    std::array<StageArray, kStageCount> transition{};
    StageArray initial{};
    StageArray mean{};
    StageArray variance{};
    /// Pooled quartiles of log(RCA + delta) separating the quantized stages.
    std::array<double, kStageCount - 1> bin_edges{};
    double delta = 1e-6;
    bool trained = false;
    /// Log-likelihood after each EM step of the kept restart.
    std::vector<double> log_likelihood;

    /// RCA level of a stage (1-based), exp(mean) - delta.
    double stage_rca(int stage) const;
};

/// Quartiles of log(RCA + delta) pooled over every series of one country.
std::array<double, kStageCount - 1> pooled_quartile_edges(const Matrix<double>& rca_series, double delta);

/// Stage (1..4) of every value: 1 + number of edges <= log(RCA + delta).
std::vector<int> quantize_rca(std::span<const double> rca_series, const std::array<double, kStageCount - 1>& edges,
                              double delta);

/// RCA series of one country: products x years.
Matrix<double> country_rca_series(const std::vector<RcaMatrix>& cube, std::size_t country);

/// Baum-Welch on every product series of a country jointly (products x years of raw RCA).
HmmModel train_hmm(const Matrix<double>& rca_series, const HmmOptions& options = {});
HmmModel train_hmm(const std::vector<RcaMatrix>& cube, std::size_t country, const HmmOptions& options = {});

/// Model with the deterministic starting parameters used by the first restart.
HmmModel initial_model(const Matrix<double>& rca_series, const HmmOptions& options = {});

/// One EM update in place; returns the log-likelihood of the parameters before the update.
double baum_welch_step(HmmModel& model, const Matrix<double>& rca_series, double variance_floor);

/// Total log-likelihood of the observed series under the model.
double log_likelihood(const HmmModel& model, const Matrix<double>& rca_series);

/// Posterior stage probabilities per year (years x 4); each row sums to 1.
Matrix<double> posterior_marginals(const HmmModel& model, std::span<const double> rca_series);

/// Most probable stage (1..4) at each year from the posterior marginals.
std::vector<int> decode_stages(const HmmModel& model, std::span<const double> rca_series);

enum class BinarizationRule {
    /// 1 iff the stage's RCA level is >= 1.
    ExpectedRca,
    /// 1 iff stage is 3 or 4.
    Top2
};
BinarizationRule parse_binarization_rule(const std::string& name);
std::string to_string(BinarizationRule rule);

/// Decoded stages per country, products x years; 0 marks an undecoded series.
using StageCube = std::vector<Matrix<std::uint8_t>>;

/// One hmm-regularized matrix per year from decoded stage paths.
std::vector<BinaryExportMatrix> binarize_stages(const StageCube& stages, const std::vector<HmmModel>& models,
                                                BinarizationRule rule);

struct Regularization {
    std::vector<HmmModel> models;
    StageCube stages;
    std::vector<BinaryExportMatrix> matrices;
    /// Countries whose model could not be trained; their rows fall back to thresholding.
    std::vector<std::string> untrained;
};

/// Trains one model per country (in parallel), decodes every series and binarizes.
Regularization regularize_panel(const ExportPanel& panel, const HmmOptions& options = {},
                                BinarizationRule rule = BinarizationRule::ExpectedRca);

/// Number of 0<->1 transitions summed over all cells of a yearly sequence.
std::size_t flip_count(std::span<const BinaryExportMatrix> years);
/// Flip count divided by the number of cells.
double mean_flip_count(std::span<const BinaryExportMatrix> years);

nlohmann::json to_json(const HmmModel& model);
HmmModel model_from_json(const nlohmann::json& j);

}  // namespace ecx
