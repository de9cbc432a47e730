#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ecx/error.hpp"
#include "ecx/forecast.hpp"
#include "ecx/panel.hpp"
#include "ecx/random.hpp"

namespace ecx {

namespace {

// Dense (entity, year) lookup of plane positions.
class PositionTable {
public:
    explicit PositionTable(const TrajectorySet& set) : entities_(set.entities.size()) {
        if (set.points.empty()) throw ValidationError("backtest needs trajectory points");
        first_ = last_ = set.points.front().year;
        for (const auto& p : set.points) {
            first_ = std::min(first_, p.year);
            last_ = std::max(last_, p.year);
            entities_ = std::max(entities_, p.entity + 1);
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        cells_.assign(entities_ * years(), Vec2{nan, nan});
        for (const auto& p : set.points) cells_[p.entity * years() + static_cast<std::size_t>(p.year - first_)] = {p.x, p.y};
    }

    std::size_t years() const { return static_cast<std::size_t>(last_ - first_ + 1); }
    std::size_t entities() const { return entities_; }
    int first() const { return first_; }
    int last() const { return last_; }

    std::optional<Vec2> at(std::size_t entity, int year) const {
        if (year < first_ || year > last_ || entity >= entities_) return std::nullopt;
        const auto& v = cells_[entity * years() + static_cast<std::size_t>(year - first_)];
        if (!std::isfinite(v[0]) || !std::isfinite(v[1])) return std::nullopt;
        return v;
    }

private:
    std::size_t entities_;
    int first_ = 0, last_ = 0;
    std::vector<Vec2> cells_;
};

AnalogueSet collect(const PositionTable& table, int year, int dt) {
    AnalogueSet out;
    out.dimension = 2;
    for (std::size_t e = 0; e < table.entities(); ++e)
        for (int t = table.first(); t < year && t + dt <= year; ++t) {
            const auto a = table.at(e, t), b = table.at(e, t + dt);
            if (!a || !b) continue;
            out.analogues.push_back({*a, {(*b)[0] - (*a)[0], (*b)[1] - (*a)[1]}, e, t, dt});
        }
    return out;
}

struct Job {
    int dt = 0;
    int year = 0;
    std::size_t entity = 0;
};

struct JobResult {
    std::vector<BacktestRow> rows;
    std::map<std::string, std::size_t> skipped;
    std::size_t analogues_checked = 0;
    std::size_t violations = 0;
};

}  // namespace

double cagr(double start, double end, double dt) {
    if (!(start > 0.0) || !(end > 0.0)) throw ValidationError("CAGR needs positive values");
    if (!(dt >= 1.0)) throw ValidationError("CAGR needs dt >= 1");
    return (std::pow(end / start, 1.0 / dt) - 1.0) * 100.0;
}

std::optional<ForecastResult> baseline_predict(ForecastMethod kind, const AnalogueSet& set,
                                               const std::optional<Vec2>& previous, std::uint64_t seed,
                                               std::span<const std::uint64_t> stream) {
    ForecastResult r;
    r.method = kind;
    r.dimension = set.dimension;
    r.seed = seed;
    switch (kind) {
        case ForecastMethod::Static:
            return r;
        case ForecastMethod::Random: {
            if (set.empty()) return std::nullopt;
            auto rng = substream(seed, stream);
            std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
            r.expectation = set.analogues[pick(rng)].displacement;
            return r;
        }
        case ForecastMethod::Autocorrelation:
            if (!previous) return std::nullopt;
            r.expectation = *previous;
            return r;
        default:
            throw ValidationError(to_string(kind) + " is not a baseline");
    }
}

AnalogueSet analogues_before(const TrajectorySet& set, int year, int dt) {
    if (dt < 1) throw ValidationError("forecast horizon must be at least 1");
    return collect(PositionTable(set), year, dt);
}

double BacktestReport::mae_of(ForecastMethod m, const std::string& metric, int dt) const {
    for (const auto& e : mae)
        if (e.method == m && e.metric == metric && e.dt == dt) return e.mae;
    return std::numeric_limits<double>::quiet_NaN();
}

double BacktestReport::overall_mae(ForecastMethod m) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows)
        if (r.method == m) {
            sum += r.error;
            ++n;
        }
    return n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

BacktestReport backtest(const TrajectorySet& set, const BacktestParams& params) {
    if (params.methods.empty()) throw ValidationError("backtest needs at least one method");
    for (int dt : params.horizons)
        if (dt < 1) throw ValidationError("forecast horizon must be at least 1");
    const PositionTable table(set);

    std::vector<Job> jobs;
    std::vector<AnalogueSet> sets;
    std::vector<std::size_t> job_set;
    for (int dt : params.horizons)
        for (int year = table.first(); year + dt <= table.last(); ++year) {
            sets.push_back(collect(table, year, dt));
            for (std::size_t e = 0; e < table.entities(); ++e)
                if (table.at(e, year) && table.at(e, year + dt)) {
                    jobs.push_back({dt, year, e});
                    job_set.push_back(sets.size() - 1);
                }
        }

    std::vector<JobResult> results(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(jobs.size()); ++j) {
        const auto& job = jobs[static_cast<std::size_t>(j)];
        const auto& analogues = sets[job_set[static_cast<std::size_t>(j)]];
        auto& out = results[static_cast<std::size_t>(j)];
        if (analogues.empty()) {
            ++out.skipped["insufficient history"];
            continue;
        }
        for (const auto& a : analogues.analogues) {
            ++out.analogues_checked;
            if (a.time >= job.year || a.time + a.horizon > job.year) ++out.violations;
        }
        const Vec2 origin = *table.at(job.entity, job.year);
        const Vec2 observed = *table.at(job.entity, job.year + job.dt);
        std::optional<Vec2> previous;
        if (auto before = table.at(job.entity, job.year - job.dt))
            previous = Vec2{origin[0] - (*before)[0], origin[1] - (*before)[1]};
        const KernelSpec kernel = params.sigma > 0.0 ? KernelSpec{params.sigma} : default_kernel(analogues);
        const std::vector<std::uint64_t> stream{job.entity, static_cast<std::uint64_t>(job.year),
                                                static_cast<std::uint64_t>(job.dt)};

        for (auto method : params.methods) {
            std::optional<ForecastResult> f;
            if (method == ForecastMethod::Nwkr) f = nwkr_predict(origin, analogues, kernel);
            else if (method == ForecastMethod::Spsb)
                f = spsb_predict(origin, analogues, kernel, {params.bootstraps, params.samples, params.seed, stream});
            else f = baseline_predict(method, analogues, previous, params.seed, stream);
            if (!f) {
                ++out.skipped["no previous displacement"];
                continue;
            }
            for (std::size_t k = 0; k < 2; ++k) {
                const double forecast_value = origin[k] + f->expectation[k];
                if (!(origin[k] > 0.0) || !(observed[k] > 0.0) || !(forecast_value > 0.0)) {
                    ++out.skipped["non-positive value"];
                    continue;
                }
                BacktestRow row;
                row.entity = job.entity < set.entities.size() ? set.entities[job.entity] : std::to_string(job.entity);
                row.year = job.year;
                row.dt = job.dt;
                row.metric = params.metric_names[k];
                row.method = method;
                row.forecast = cagr(origin[k], forecast_value, job.dt);
                row.observed = cagr(origin[k], observed[k], job.dt);
                row.error = std::fabs(row.observed - row.forecast);
                out.rows.push_back(std::move(row));
            }
        }
    }

    BacktestReport report;
    report.audit.forecasts = jobs.size();
    for (auto& r : results) {
        report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
        for (const auto& [k, v] : r.skipped) report.skipped[k] += v;
        report.audit.analogues_checked += r.analogues_checked;
        report.audit.violations += r.violations;
    }
    for (auto method : params.methods)
        for (std::size_t k = 0; k < 2; ++k)
            for (int dt : params.horizons) {
                MaeEntry e{method, params.metric_names[k], dt, 0.0, 0};
                for (const auto& r : report.rows)
                    if (r.method == method && r.metric == e.metric && r.dt == dt) {
                        e.mae += r.error;
                        ++e.count;
                    }
                e.mae = e.count > 0 ? e.mae / static_cast<double>(e.count) : std::numeric_limits<double>::quiet_NaN();
                report.mae.push_back(e);
            }
    return report;
}

void write_backtest_csv(std::ostream& out, const BacktestReport& report) {
    out << "entity,year,dt,metric,method,forecast,observed,error\n";
    for (const auto& r : report.rows)
        out << r.entity << ',' << r.year << ',' << r.dt << ',' << r.metric << ',' << to_string(r.method) << ','
            << format_double(r.forecast) << ',' << format_double(r.observed) << ',' << format_double(r.error) << '\n';
}

nlohmann::json backtest_summary(const BacktestReport& report) {
    nlohmann::json j;
    j["mae"] = nlohmann::json::array();
    for (const auto& e : report.mae) {
        j["mae"].push_back({{"method", to_string(e.method)},
                            {"metric", e.metric},
                            {"dt", e.dt},
                            {"mae", std::isfinite(e.mae) ? nlohmann::json(e.mae) : nlohmann::json(nullptr)},
                            {"count", e.count}});
    }
    j["skipped"] = report.skipped;
    j["leakage_audit"] = {{"forecasts", report.audit.forecasts},
                          {"analogues_checked", report.audit.analogues_checked},
                          {"violations", report.audit.violations}};
    return j;
}

}  // namespace ecx
