#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecx/matrix.hpp"
#include "ecx/trajectory.hpp"

namespace ecx {

using Vec2 = std::array<double, 2>;

/// A past (position, displacement) pair. `time` is the start year and
/// `horizon` the number of years the displacement spans.
struct Analogue {
    Vec2 position{};
    Vec2 displacement{};
    std::size_t entity = 0;
    int time = 0;
    int horizon = 1;
};

/// Analogues sharing the dimension of their displacements (1 or 2).
struct AnalogueSet {
    std::size_t dimension = 2;
    std::vector<Analogue> analogues;

    std::size_t size() const { return analogues.size(); }
    bool empty() const { return analogues.empty(); }
};

struct KernelSpec {
    double sigma = 1.0;
    void validate() const;
};

/// 0.1 times the diagonal of the bounding box of the analogue positions
/// (1.0 when the box is a point).
KernelSpec default_kernel(const AnalogueSet& set);

enum class ForecastMethod { Spsb, Nwkr, Random, Static, Autocorrelation };
std::string to_string(ForecastMethod m);
ForecastMethod parse_forecast_method(const std::string& name);

struct ForecastResult {
    ForecastMethod method = ForecastMethod::Nwkr;
    Vec2 expectation{};
    Vec2 standard_deviation{};
    std::size_t dimension = 2;
    double sigma = 0.0;
    std::size_t bootstraps = 0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    /// (sum w)^2 / sum w^2 of the normalized kernel weights.
    double effective_count = 0.0;
    /// Kernel weights underflowed; the nearest analogue was used.
    bool nearest_fallback = false;
};

struct KernelWeights {
    std::vector<double> probability;
    bool nearest_fallback = false;
};

/// Normalized Gaussian weights exp(-d^2 / 2 sigma^2), evaluated in log
/// space relative to the largest one.
KernelWeights kernel_probabilities(const Vec2& query, const AnalogueSet& set, const KernelSpec& kernel);

/// Kernel-weighted mean and population standard deviation of displacements.
ForecastResult nwkr_predict(const Vec2& query, const AnalogueSet& set, const KernelSpec& kernel);
std::vector<ForecastResult> nwkr_predict(std::span<const Vec2> queries, const AnalogueSet& set,
                                         const KernelSpec& kernel);

struct SpsbParams {
    std::size_t bootstraps = 1000;
    std::size_t samples = 100;
    std::uint64_t seed = 0;
    /// Extra substream keys identifying the job, e.g. (target, year).
    std::vector<std::uint64_t> stream;
};

struct SpsbDraw {
    ForecastResult result;
    /// Number of times each analogue was drawn over all bootstraps.
    std::vector<std::uint64_t> counts;
};

/// Bootstrap of kernel-weighted resamples: B bootstrap means of N draws,
/// E = mean of the bootstrap means, sigma = their sample standard deviation.
/// Bootstraps are drawn in fixed chunks of 1024, each on its own substream.
SpsbDraw spsb_sample(const Vec2& query, const AnalogueSet& set, const KernelSpec& kernel, const SpsbParams& params);
ForecastResult spsb_predict(const Vec2& query, const AnalogueSet& set, const KernelSpec& kernel,
                            const SpsbParams& params);

struct ConvergenceRow {
    std::size_t bootstraps = 0;
    /// Mean over queries of |E_spsb - E_nwkr| / |E_nwkr|.
    double mae_expectation = 0.0;
    /// Mean over queries of |sqrt(N) sigma_spsb - sigma_nwkr| / sigma_nwkr.
    double mae_sd = 0.0;
};

struct ProbabilityRow {
    std::size_t analogue = 0;
    double probability = 0.0;
    double frequency = 0.0;
};

struct ConvergenceDiagnostics {
    std::vector<ConvergenceRow> rows;
    /// Kernel probability against sampled frequency, first query at the largest B.
    std::vector<ProbabilityRow> table;
    /// Largest kernel probability whose sampled frequency deviates from it by more than half.
    double divergence_level = 0.0;
    /// Share of analogues with p < 1/(B N) drawn at least once.
    double rare_sampled_fraction = 0.0;
    /// Spearman correlation of MAE(E) with B and its one-sided p-value for a decreasing trend.
    double trend_rho = 0.0;
    double trend_p_value = 1.0;
};

/// Throws ValidationError unless `schedule` is strictly increasing.
ConvergenceDiagnostics convergence_scan(std::span<const Vec2> queries, const AnalogueSet& set,
                                        const KernelSpec& kernel, std::span<const std::size_t> schedule,
                                        std::size_t samples, std::uint64_t seed);
void write_convergence_csv(std::ostream& out, const ConvergenceDiagnostics& d);
void write_probability_csv(std::ostream& out, const ConvergenceDiagnostics& d);

/// Percentage compound annual growth rate. Throws ValidationError for
/// non-positive values or dt < 1.
double cagr(double start, double end, double dt);

/// Baselines: static predicts no displacement, random draws one analogue,
/// autocorrelation repeats `previous`. Returns nullopt when the needed
/// input is missing.
std::optional<ForecastResult> baseline_predict(ForecastMethod kind, const AnalogueSet& set,
                                               const std::optional<Vec2>& previous, std::uint64_t seed,
                                               std::span<const std::uint64_t> stream = {});

struct BacktestParams {
    std::vector<ForecastMethod> methods{ForecastMethod::Spsb, ForecastMethod::Nwkr, ForecastMethod::Random,
                                        ForecastMethod::Static, ForecastMethod::Autocorrelation};
    std::vector<int> horizons{3, 4, 5};
    /// Non-positive selects default_kernel per analogue set.
    double sigma = 0.0;
    std::size_t bootstraps = 1000;
    std::size_t samples = 100;
    std::uint64_t seed = 0;
    std::array<std::string, 2> metric_names{"x", "y"};
};

struct BacktestRow {
    std::string entity;
    int year = 0;
    int dt = 0;
    std::string metric;
    ForecastMethod method = ForecastMethod::Nwkr;
    double forecast = 0.0;
    double observed = 0.0;
    double error = 0.0;
};

struct LeakageAudit {
    std::size_t forecasts = 0;
    std::size_t analogues_checked = 0;
    /// Analogues starting at or after the forecast year, or ending after it.
    std::size_t violations = 0;
};

struct MaeEntry {
    ForecastMethod method;
    std::string metric;
    int dt = 0;
    double mae = 0.0;
    std::size_t count = 0;
};

struct BacktestReport {
    std::vector<BacktestRow> rows;
    std::vector<MaeEntry> mae;
    /// Targets skipped per reason.
    std::map<std::string, std::size_t> skipped;
    LeakageAudit audit;

    double mae_of(ForecastMethod m, const std::string& metric, int dt) const;
    /// Mean of the per-row errors of one method over every metric and horizon.
    double overall_mae(ForecastMethod m) const;
};

/// Analogues with start t < year and t + dt <= year, one per entity and start year.
AnalogueSet analogues_before(const TrajectorySet& set, int year, int dt);

/// Walk-forward backtest over every forecast year with a known outcome.
/// Forecasts of the two plane coordinates are converted to CAGR% per metric.
BacktestReport backtest(const TrajectorySet& set, const BacktestParams& params);

/// `entity,year,dt,metric,method,forecast,observed,error`.
void write_backtest_csv(std::ostream& out, const BacktestReport& report);
nlohmann::json backtest_summary(const BacktestReport& report);

/// F_c = sum_p M_cp C_p.
std::vector<double> reconstruct_fitness(const BinaryMatrix& mcp, std::span<const double> complexity);

struct GdpInversion {
    std::vector<double> log_gdp;
    double residual_norm = 0.0;
    std::size_t rank = 0;
    bool rank_deficient = false;
};

/// Least-squares solution g of nRCA^T g = logPRODY (countries x products
/// nRCA); minimum-norm when nRCA is rank deficient.
GdpInversion invert_nrca_gdp(const Matrix<double>& nrca, std::span<const double> logprody);

}  // namespace ecx
