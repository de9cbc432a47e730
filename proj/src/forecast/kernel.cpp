#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ecx/error.hpp"
#include "ecx/forecast.hpp"
#include "ecx/panel.hpp"
#include "ecx/parallel.hpp"
#include "ecx/random.hpp"
#include "ecx/stats.hpp"

namespace ecx {

namespace {

constexpr std::size_t kBootstrapChunk = 1024;

void require_analogues(const AnalogueSet& set) {
    if (set.empty()) throw ValidationError("forecast needs at least one analogue");
    if (set.dimension != 1 && set.dimension != 2) throw ValidationError("analogue dimension must be 1 or 2");
}

// Vose alias table over a normalized distribution.
class AliasTable {
public:
    explicit AliasTable(std::span<const double> p) : accept_(p.size(), 1.0), alias_(p.size()) {
        const std::size_t n = p.size();
        std::vector<double> scaled(n);
        std::vector<std::size_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            alias_[i] = i;
            scaled[i] = p[i] * static_cast<double>(n);
            (scaled[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            const auto s = small.back();
            small.pop_back();
            const auto l = large.back();
            accept_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
    }

    std::size_t draw(Rng& rng) const {
        const double u = uniform01(rng) * static_cast<double>(accept_.size());
        const auto i = std::min(static_cast<std::size_t>(u), accept_.size() - 1);
        return u - static_cast<double>(i) < accept_[i] ? i : alias_[i];
    }

private:
    std::vector<double> accept_;
    std::vector<std::size_t> alias_;
};

}  // namespace

void KernelSpec::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("kernel bandwidth must be positive");
}

KernelSpec default_kernel(const AnalogueSet& set) {
    require_analogues(set);
    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi{-lo[0], -lo[1]};
    for (const auto& a : set.analogues)
        for (int k = 0; k < 2; ++k) {
            lo[k] = std::min(lo[k], a.position[k]);
            hi[k] = std::max(hi[k], a.position[k]);
        }
    const double diagonal = std::hypot(hi[0] - lo[0], hi[1] - lo[1]);
    return {diagonal > 0.0 ? 0.1 * diagonal : 1.0};
}

std::string to_string(ForecastMethod m) {
    switch (m) {
        case ForecastMethod::Spsb: return "spsb";
        case ForecastMethod::Nwkr: return "nwkr";
        case ForecastMethod::Random: return "random";
        case ForecastMethod::Static: return "static";
        case ForecastMethod::Autocorrelation: return "autocorrelation";
    }
    return "?";
}

ForecastMethod parse_forecast_method(const std::string& name) {
    for (auto m : {ForecastMethod::Spsb, ForecastMethod::Nwkr, ForecastMethod::Random, ForecastMethod::Static,
                   ForecastMethod::Autocorrelation})
        if (to_string(m) == name) return m;
    throw ValidationError("unknown forecast method '" + name + "' (spsb|nwkr|random|static|autocorrelation)");
}

KernelWeights kernel_probabilities(const Vec2& query, const AnalogueSet& set, const KernelSpec& kernel) {
    require_analogues(set);
    kernel.validate();
    const std::size_t n = set.size();
    std::vector<double> log_w(n);
    const double scale = 1.0 / (2.0 * kernel.sigma * kernel.sigma);
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = query[0] - set.analogues[i].position[0];
        const double dy = query[1] - set.analogues[i].position[1];
        log_w[i] = -(dx * dx + dy * dy) * scale;
    }
    const auto top = std::max_element(log_w.begin(), log_w.end());
    KernelWeights out;
    out.probability.assign(n, 0.0);
    if (*top < -708.0) {
        out.nearest_fallback = true;
        out.probability[static_cast<std::size_t>(top - log_w.begin())] = 1.0;
        return out;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += out.probability[i] = std::exp(log_w[i] - *top);
    for (auto& p : out.probability) p /= total;
    return out;
}

ForecastResult nwkr_predict(const Vec2& query, const AnalogueSet& set, const KernelSpec& kernel) {
    const auto w = kernel_probabilities(query, set, kernel);
    ForecastResult r;
    r.method = ForecastMethod::Nwkr;
    r.dimension = set.dimension;
    r.sigma = kernel.sigma;
    r.nearest_fallback = w.nearest_fallback;
    double sum_sq = 0.0;
    for (double p : w.probability) sum_sq += p * p;
    r.effective_count = 1.0 / sum_sq;
    for (std::size_t k = 0; k < set.dimension; ++k) {
        double e = 0.0;
        for (std::size_t i = 0; i < set.size(); ++i) e += w.probability[i] * set.analogues[i].displacement[k];
        double var = 0.0;
        for (std::size_t i = 0; i < set.size(); ++i) {
            const double d = set.analogues[i].displacement[k] - e;
            var += w.probability[i] * d * d;
        }
        r.expectation[k] = e;
        r.standard_deviation[k] = std::sqrt(var);
    }
    return r;
}

std::vector<ForecastResult> nwkr_predict(std::span<const Vec2> queries, const AnalogueSet& set,
                                         const KernelSpec& kernel) {
    require_analogues(set);
    kernel.validate();
    std::vector<ForecastResult> out(queries.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(queries.size()); ++q)
        out[static_cast<std::size_t>(q)] = nwkr_predict(queries[static_cast<std::size_t>(q)], set, kernel);
    return out;
}

SpsbDraw spsb_sample(const Vec2& query, const AnalogueSet& set, const KernelSpec& kernel, const SpsbParams& params) {
    if (params.bootstraps == 0 || params.samples == 0) throw ValidationError("SPSb needs B >= 1 and N >= 1");
    const auto w = kernel_probabilities(query, set, kernel);
    const AliasTable table(w.probability);
    const std::size_t dim = set.dimension, B = params.bootstraps, N = params.samples;

    std::vector<double> means(B * dim, 0.0);
    const std::size_t chunks = (B + kBootstrapChunk - 1) / kBootstrapChunk;
    std::vector<std::vector<std::uint64_t>> chunk_counts(chunks);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
        std::vector<std::uint64_t> keys = params.stream;
        keys.push_back(static_cast<std::uint64_t>(c));
        auto rng = substream(params.seed, keys);
        auto& counts = chunk_counts[static_cast<std::size_t>(c)];
        counts.assign(set.size(), 0);
        const std::size_t begin = static_cast<std::size_t>(c) * kBootstrapChunk;
        const std::size_t end = std::min(B, begin + kBootstrapChunk);
        for (std::size_t b = begin; b < end; ++b) {
            double sum[2] = {0.0, 0.0};
            for (std::size_t s = 0; s < N; ++s) {
                const auto i = table.draw(rng);
                ++counts[i];
                for (std::size_t k = 0; k < dim; ++k) sum[k] += set.analogues[i].displacement[k];
            }
            for (std::size_t k = 0; k < dim; ++k) means[b * dim + k] = sum[k] / static_cast<double>(N);
        }
    }

    SpsbDraw out;
    out.counts.assign(set.size(), 0);
    for (const auto& cc : chunk_counts)
        for (std::size_t i = 0; i < cc.size(); ++i) out.counts[i] += cc[i];
    auto& r = out.result;
    r.method = ForecastMethod::Spsb;
    r.dimension = dim;
    r.sigma = kernel.sigma;
    r.bootstraps = B;
    r.samples = N;
    r.seed = params.seed;
    r.nearest_fallback = w.nearest_fallback;
    double sum_sq = 0.0;
    for (double p : w.probability) sum_sq += p * p;
    r.effective_count = 1.0 / sum_sq;
    for (std::size_t k = 0; k < dim; ++k) {
        double e = 0.0;
        for (std::size_t b = 0; b < B; ++b) e += means[b * dim + k];
        e /= static_cast<double>(B);
        double ss = 0.0;
        for (std::size_t b = 0; b < B; ++b) ss += (means[b * dim + k] - e) * (means[b * dim + k] - e);
        r.expectation[k] = e;
        r.standard_deviation[k] = B > 1 ? std::sqrt(ss / static_cast<double>(B - 1)) : 0.0;
    }
    return out;
}

ForecastResult spsb_predict(const Vec2& query, const AnalogueSet& set, const KernelSpec& kernel,
                            const SpsbParams& params) {
    return spsb_sample(query, set, kernel, params).result;
}

ConvergenceDiagnostics convergence_scan(std::span<const Vec2> queries, const AnalogueSet& set,
                                        const KernelSpec& kernel, std::span<const std::size_t> schedule,
                                        std::size_t samples, std::uint64_t seed) {
    if (schedule.empty() || queries.empty()) throw ValidationError("convergence scan needs queries and a B schedule");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] <= schedule[i - 1]) throw ValidationError("B schedule must be strictly increasing");
    const auto reference = nwkr_predict(queries, set, kernel);
    const double root_n = std::sqrt(static_cast<double>(samples));

    ConvergenceDiagnostics d;
    std::vector<std::uint64_t> first_counts;
    for (std::size_t s = 0; s < schedule.size(); ++s) {
        ConvergenceRow row;
        row.bootstraps = schedule[s];
        double err_e = 0.0, err_sd = 0.0;
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const auto draw = spsb_sample(queries[q], set, kernel, {schedule[s], samples, seed, {q, schedule[s]}});
            if (q == 0 && s + 1 == schedule.size()) first_counts = draw.counts;
            for (std::size_t k = 0; k < set.dimension; ++k) {
                const auto& ref = reference[q];
                err_e += std::fabs((draw.result.expectation[k] - ref.expectation[k]) / ref.expectation[k]);
                err_sd += std::fabs((root_n * draw.result.standard_deviation[k] - ref.standard_deviation[k]) /
                                    ref.standard_deviation[k]);
            }
        }
        const double terms = static_cast<double>(queries.size() * set.dimension);
        row.mae_expectation = err_e / terms;
        row.mae_sd = err_sd / terms;
        d.rows.push_back(row);
    }

    const auto w = kernel_probabilities(queries[0], set, kernel);
    const double draws = static_cast<double>(schedule.back()) * static_cast<double>(samples);
    std::size_t rare = 0, rare_hit = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double p = w.probability[i];
        const double phi = static_cast<double>(first_counts[i]) / draws;
        d.table.push_back({i, p, phi});
        if (p > 0.0 && std::fabs(phi - p) > 0.5 * p) d.divergence_level = std::max(d.divergence_level, p);
        if (p < 1.0 / draws) {
            ++rare;
            rare_hit += first_counts[i] > 0 ? 1 : 0;
        }
    }
    d.rare_sampled_fraction = rare > 0 ? static_cast<double>(rare_hit) / static_cast<double>(rare) : 0.0;
    std::sort(d.table.begin(), d.table.end(), [](const auto& a, const auto& b) {
        return a.probability > b.probability || (a.probability == b.probability && a.analogue < b.analogue);
    });

    if (d.rows.size() >= 2) {
        std::vector<double> bs, mae;
        for (const auto& r : d.rows) {
            bs.push_back(static_cast<double>(r.bootstraps));
            mae.push_back(r.mae_expectation);
        }
        d.trend_rho = stats::spearman(bs, mae);
        d.trend_p_value = stats::spearman_negative_p_value(bs, mae);
    }
    return d;
}

void write_convergence_csv(std::ostream& out, const ConvergenceDiagnostics& d) {
    out << "bootstraps,mae_expectation,mae_sd\n";
    for (const auto& r : d.rows)
        out << r.bootstraps << ',' << format_double(r.mae_expectation) << ',' << format_double(r.mae_sd) << '\n';
}

void write_probability_csv(std::ostream& out, const ConvergenceDiagnostics& d) {
    out << "analogue,probability,frequency\n";
    for (const auto& r : d.table)
        out << r.analogue << ',' << format_double(r.probability) << ',' << format_double(r.frequency) << '\n';
}

}  // namespace ecx
