#include "ecx/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ecx/error.hpp"
#include "ecx/parallel.hpp"
#include "ecx/random.hpp"
#include "ecx/stats.hpp"

namespace ecx {

namespace {

constexpr std::size_t K = kStageCount;
constexpr double kLog2Pi = 1.8378770664093453;

// Emission log-densities of every stage for one observation.
StageArray log_emission(const HmmModel& m, double o) {
    StageArray out{};
    for (std::size_t k = 0; k < K; ++k) {
        const double d = o - m.mean[k];
        out[k] = -0.5 * (kLog2Pi + std::log(m.variance[k]) + d * d / m.variance[k]);
    }
    return out;
}

// Scaled forward-backward for one observation sequence.
struct ForwardBackward {
    std::vector<StageArray> alpha, beta, emit;  // emit: emission densities shifted by their max
    std::vector<double> scale;                   // per-step normalizers c_t
    double log_likelihood = 0.0;
};

ForwardBackward forward_backward(const HmmModel& m, std::span<const double> obs) {
    const std::size_t T = obs.size();
    ForwardBackward fb;
    fb.alpha.resize(T);
    fb.beta.resize(T);
    fb.emit.resize(T);
    fb.scale.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        auto le = log_emission(m, obs[t]);
        const double mx = *std::max_element(le.begin(), le.end());
        for (std::size_t k = 0; k < K; ++k) fb.emit[t][k] = std::exp(le[k] - mx);
        fb.log_likelihood += mx;
    }
    for (std::size_t t = 0; t < T; ++t) {
        double s = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
            double a = 0.0;
            if (t == 0) {
                a = m.initial[j];
            } else {
                for (std::size_t i = 0; i < K; ++i) a += fb.alpha[t - 1][i] * m.transition[i][j];
            }
            fb.alpha[t][j] = a * fb.emit[t][j];
            s += fb.alpha[t][j];
        }
        if (!(s > 0.0)) s = std::numeric_limits<double>::min();
        for (auto& a : fb.alpha[t]) a /= s;
        fb.scale[t] = s;
        fb.log_likelihood += std::log(s);
    }
    fb.beta[T - 1].fill(1.0);
    for (std::size_t t = T - 1; t-- > 0;) {
        for (std::size_t i = 0; i < K; ++i) {
            double b = 0.0;
            for (std::size_t j = 0; j < K; ++j) b += m.transition[i][j] * fb.emit[t + 1][j] * fb.beta[t + 1][j];
            fb.beta[t][i] = b / fb.scale[t + 1];
        }
    }
    return fb;
}

struct Accumulators {
    StageArray initial{};
    std::array<StageArray, K> transition{};
    StageArray from_weight{};  // sum of gamma over t < T-1
    StageArray weight{};       // sum of gamma over all t
    StageArray sum{};          // sum of gamma * o
    StageArray sum_sq{};       // sum of gamma * o^2
    double log_likelihood = 0.0;
    std::size_t sequences = 0;

    void merge(const Accumulators& o) {
        for (std::size_t i = 0; i < K; ++i) {
            initial[i] += o.initial[i];
            from_weight[i] += o.from_weight[i];
            weight[i] += o.weight[i];
            sum[i] += o.sum[i];
            sum_sq[i] += o.sum_sq[i];
            for (std::size_t j = 0; j < K; ++j) transition[i][j] += o.transition[i][j];
        }
        log_likelihood += o.log_likelihood;
        sequences += o.sequences;
    }
};

void accumulate(const HmmModel& m, std::span<const double> obs, Accumulators& acc) {
    const auto fb = forward_backward(m, obs);
    const std::size_t T = obs.size();
    acc.log_likelihood += fb.log_likelihood;
    acc.sequences += 1;
    for (std::size_t t = 0; t < T; ++t) {
        StageArray g{};
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            g[k] = fb.alpha[t][k] * fb.beta[t][k];
            s += g[k];
        }
        for (std::size_t k = 0; k < K; ++k) {
            g[k] /= s;
            if (t == 0) acc.initial[k] += g[k];
            if (t + 1 < T) acc.from_weight[k] += g[k];
            acc.weight[k] += g[k];
            acc.sum[k] += g[k] * obs[t];
            acc.sum_sq[k] += g[k] * obs[t] * obs[t];
        }
        if (t + 1 < T) {
            for (std::size_t i = 0; i < K; ++i)
                for (std::size_t j = 0; j < K; ++j)
                    acc.transition[i][j] += fb.alpha[t][i] * m.transition[i][j] * fb.emit[t + 1][j] *
                                            fb.beta[t + 1][j] / fb.scale[t + 1];
        }
    }
}

Matrix<double> to_log(const Matrix<double>& rca, double delta) {
    Matrix<double> out(rca.rows(), rca.cols());
    auto src = rca.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::log(src[i] + delta);
    return out;
}

// E-step over all sequences with a fixed chunking, reduced in chunk order.
Accumulators expectation(const HmmModel& m, const Matrix<double>& log_series) {
    const auto chunks = parallel::chunk_ranges(log_series.rows(), 64);
    std::vector<Accumulators> partial(chunks.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(chunks.size()); ++ci) {
        const auto [b, e] = chunks[static_cast<std::size_t>(ci)];
        for (std::size_t r = b; r < e; ++r) accumulate(m, log_series.row(r), partial[static_cast<std::size_t>(ci)]);
    }
    Accumulators total;
    for (const auto& p : partial) total.merge(p);
    return total;
}

void maximize(HmmModel& m, const Accumulators& acc, double variance_floor) {
    const double n = static_cast<double>(acc.sequences);
    for (std::size_t k = 0; k < K; ++k) m.initial[k] = acc.initial[k] / n;
    for (std::size_t i = 0; i < K; ++i) {
        if (acc.from_weight[i] > 1e-300) {
            double row = 0.0;
            for (std::size_t j = 0; j < K; ++j) row += acc.transition[i][j];
            for (std::size_t j = 0; j < K; ++j) m.transition[i][j] = acc.transition[i][j] / row;
        }
        if (acc.weight[i] > 1e-300) {
            const double mu = acc.sum[i] / acc.weight[i];
            const double var = acc.sum_sq[i] / acc.weight[i] - mu * mu;
            m.mean[i] = mu;
            m.variance[i] = std::max(var, variance_floor);
        }
    }
}

void relabel_by_mean(HmmModel& m) {
    std::array<std::size_t, K> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return m.mean[a] < m.mean[b]; });
    HmmModel r = m;
    for (std::size_t a = 0; a < K; ++a) {
        r.initial[a] = m.initial[order[a]];
        r.mean[a] = m.mean[order[a]];
        r.variance[a] = m.variance[order[a]];
        for (std::size_t b = 0; b < K; ++b) r.transition[a][b] = m.transition[order[a]][order[b]];
    }
    m = std::move(r);
}

HmmModel start_model(const Matrix<double>& log_series, const HmmOptions& options) {
    HmmModel m;
    m.delta = options.delta;
    std::vector<double> pooled(log_series.data().begin(), log_series.data().end());
    std::sort(pooled.begin(), pooled.end());
    for (std::size_t k = 0; k < K - 1; ++k)
        m.bin_edges[k] = stats::quantile_sorted(pooled, 0.25 * static_cast<double>(k + 1));
    const double var = std::max(stats::sample_sd(pooled) * stats::sample_sd(pooled) / 4.0, options.variance_floor);
    for (std::size_t k = 0; k < K; ++k) {
        m.mean[k] = stats::quantile_sorted(pooled, (2.0 * static_cast<double>(k) + 1.0) / 8.0);
        m.variance[k] = var;
        m.initial[k] = 1.0 / K;
        for (std::size_t j = 0; j < K; ++j)
            m.transition[k][j] = k == j ? options.sticky : (1.0 - options.sticky) / (K - 1);
    }
    return m;
}

}  // namespace

double HmmModel::stage_rca(int stage) const {
    return std::exp(mean.at(static_cast<std::size_t>(stage - 1))) - delta;
}

std::array<double, kStageCount - 1> pooled_quartile_edges(const Matrix<double>& rca_series, double delta) {
    auto logs = to_log(rca_series, delta);
    std::vector<double> pooled(logs.data().begin(), logs.data().end());
    if (pooled.empty()) throw ValidationError("no RCA values to quantize");
    std::sort(pooled.begin(), pooled.end());
    std::array<double, kStageCount - 1> edges{};
    for (std::size_t k = 0; k < edges.size(); ++k)
        edges[k] = stats::quantile_sorted(pooled, 0.25 * static_cast<double>(k + 1));
    return edges;
}

std::vector<int> quantize_rca(std::span<const double> rca_series, const std::array<double, kStageCount - 1>& edges,
                              double delta) {
    std::vector<int> out(rca_series.size());
    for (std::size_t t = 0; t < rca_series.size(); ++t) {
        const double v = std::log(rca_series[t] + delta);
        int stage = 1;
        for (double e : edges) stage += v >= e ? 1 : 0;
        out[t] = stage;
    }
    return out;
}

Matrix<double> country_rca_series(const std::vector<RcaMatrix>& cube, std::size_t country) {
    if (cube.empty()) throw ValidationError("empty RCA cube");
    const std::size_t np = cube.front().values.cols();
    Matrix<double> out(np, cube.size());
    for (std::size_t t = 0; t < cube.size(); ++t)
        for (std::size_t p = 0; p < np; ++p) out(p, t) = cube[t].values(country, p);
    return out;
}

HmmModel initial_model(const Matrix<double>& rca_series, const HmmOptions& options) {
    auto m = start_model(to_log(rca_series, options.delta), options);
    return m;
}

double baum_welch_step(HmmModel& model, const Matrix<double>& rca_series, double variance_floor) {
    const auto acc = expectation(model, to_log(rca_series, model.delta));
    maximize(model, acc, variance_floor);
    return acc.log_likelihood;
}

double log_likelihood(const HmmModel& model, const Matrix<double>& rca_series) {
    return expectation(model, to_log(rca_series, model.delta)).log_likelihood;
}

HmmModel train_hmm(const Matrix<double>& rca_series, const HmmOptions& options) {
    if (rca_series.cols() < 5) throw ValidationError("HMM training needs at least 5 years of data");
    const auto logs = to_log(rca_series, options.delta);
    HmmModel base = start_model(logs, options);
    const auto [lo, hi] = std::minmax_element(logs.data().begin(), logs.data().end());
    if (rca_series.rows() == 0 || *hi - *lo == 0.0) {
        base.trained = false;  // degenerate: nothing to learn
        return base;
    }
    const double spread = *hi - *lo;

    HmmModel best;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(1, options.restarts); ++r) {
        HmmModel m = base;
        if (r > 0) {
            auto rng = substream(options.seed, {r});
            std::normal_distribution<double> jitter(0.0, 0.1 * spread);
            for (auto& mu : m.mean) mu += jitter(rng);
            std::sort(m.mean.begin(), m.mean.end());
            std::uniform_real_distribution<double> diag(0.7, 0.95);
            for (std::size_t i = 0; i < K; ++i) {
                const double d = diag(rng);
                for (std::size_t j = 0; j < K; ++j) m.transition[i][j] = i == j ? d : (1.0 - d) / (K - 1);
            }
        }
        double previous = -std::numeric_limits<double>::infinity();
        for (std::size_t it = 0; it < options.max_iterations; ++it) {
            const auto acc = expectation(m, logs);
            m.log_likelihood.push_back(acc.log_likelihood);
            const double gain = acc.log_likelihood - previous;
            previous = acc.log_likelihood;
            if (it > 0 && gain < options.tolerance) break;
            maximize(m, acc, options.variance_floor);
        }
        if (previous > best_ll) {
            best_ll = previous;
            best = std::move(m);
        }
    }
    best.trained = true;
    relabel_by_mean(best);
    return best;
}

HmmModel train_hmm(const std::vector<RcaMatrix>& cube, std::size_t country, const HmmOptions& options) {
    return train_hmm(country_rca_series(cube, country), options);
}

Matrix<double> posterior_marginals(const HmmModel& model, std::span<const double> rca_series) {
    if (!model.trained) throw ComputationError("HMM model for '" + model.country + "' is not trained");
    if (rca_series.empty()) return {};
    std::vector<double> obs(rca_series.size());
    for (std::size_t t = 0; t < obs.size(); ++t) obs[t] = std::log(rca_series[t] + model.delta);
    const auto fb = forward_backward(model, obs);
    Matrix<double> out(obs.size(), K);
    for (std::size_t t = 0; t < obs.size(); ++t) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += fb.alpha[t][k] * fb.beta[t][k];
        for (std::size_t k = 0; k < K; ++k) out(t, k) = fb.alpha[t][k] * fb.beta[t][k] / s;
    }
    return out;
}

std::vector<int> decode_stages(const HmmModel& model, std::span<const double> rca_series) {
    const auto post = posterior_marginals(model, rca_series);
    std::vector<int> out(post.rows());
    for (std::size_t t = 0; t < post.rows(); ++t) {
        const auto row = post.row(t);
        out[t] = 1 + static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

BinarizationRule parse_binarization_rule(const std::string& name) {
    if (name == "expected-rca") return BinarizationRule::ExpectedRca;
    if (name == "top2") return BinarizationRule::Top2;
    throw ValidationError("unknown binarization rule '" + name + "' (expected-rca|top2)");
}

std::string to_string(BinarizationRule rule) {
    return rule == BinarizationRule::ExpectedRca ? "expected-rca" : "top2";
}

std::vector<BinaryExportMatrix> binarize_stages(const StageCube& stages, const std::vector<HmmModel>& models,
                                                BinarizationRule rule) {
    if (stages.size() != models.size()) throw ValidationError("stage cube and model list differ in size");
    if (stages.empty()) return {};
    const std::size_t nc = stages.size(), np = stages.front().rows(), years = stages.front().cols();
    std::vector<BinaryExportMatrix> out(years, {BinaryMatrix(nc, np, 0), MatrixProvenance::HmmRegularized});
    for (std::size_t c = 0; c < nc; ++c) {
        std::array<std::uint8_t, K + 1> on{};
        for (int s = 1; s <= static_cast<int>(K); ++s) {
            on[static_cast<std::size_t>(s)] =
                rule == BinarizationRule::Top2 ? (s >= 3) : (models[c].stage_rca(s) >= 1.0);
        }
        for (std::size_t p = 0; p < np; ++p)
            for (std::size_t t = 0; t < years; ++t) out[t].m(c, p) = on[stages[c](p, t)];
    }
    return out;
}

Regularization regularize_panel(const ExportPanel& panel, const HmmOptions& options, BinarizationRule rule) {
    const auto cube = compute_rca_cube(panel);
    const std::size_t nc = panel.countries().size(), np = panel.products().size(), years = panel.year_count();
    Regularization out;
    out.models.resize(nc);
    out.stages.assign(nc, Matrix<std::uint8_t>(np, years, 0));

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(nc); ++ci) {
        const auto c = static_cast<std::size_t>(ci);
        HmmOptions local = options;
        local.seed = substream(options.seed, {c})();
        const auto series = country_rca_series(cube, c);
        auto model = train_hmm(series, local);
        model.country = panel.countries().code(c);
        if (model.trained) {
            for (std::size_t p = 0; p < np; ++p) {
                const auto path = decode_stages(model, series.row(p));
                for (std::size_t t = 0; t < years; ++t) out.stages[c](p, t) = static_cast<std::uint8_t>(path[t]);
            }
        }
        out.models[c] = std::move(model);
    }

    out.matrices.assign(years, {BinaryMatrix(nc, np, 0), MatrixProvenance::HmmRegularized});
    for (std::size_t c = 0; c < nc; ++c) {
        const auto& model = out.models[c];
        if (!model.trained) out.untrained.push_back(model.country);
        for (std::size_t t = 0; t < years; ++t) {
            for (std::size_t p = 0; p < np; ++p) {
                std::uint8_t bit = 0;
                if (model.trained) {
                    const int s = out.stages[c](p, t);
                    bit = rule == BinarizationRule::Top2 ? (s >= 3) : (model.stage_rca(s) >= 1.0);
                } else {
                    bit = cube[t].values(c, p) >= 1.0;
                }
                out.matrices[t].m(c, p) = bit;
            }
        }
    }
    return out;
}

std::size_t flip_count(std::span<const BinaryExportMatrix> years) {
    std::size_t flips = 0;
    for (std::size_t t = 1; t < years.size(); ++t) {
        auto a = years[t - 1].m.data();
        auto b = years[t].m.data();
        for (std::size_t i = 0; i < a.size(); ++i) flips += a[i] != b[i];
    }
    return flips;
}

double mean_flip_count(std::span<const BinaryExportMatrix> years) {
    if (years.empty() || years.front().m.size() == 0) return 0.0;
    return static_cast<double>(flip_count(years)) / static_cast<double>(years.front().m.size());
}

nlohmann::json to_json(const HmmModel& m) {
    nlohmann::json j;
    j["country"] = m.country;
    j["trained"] = m.trained;
    j["delta"] = m.delta;
    j["transition"] = m.transition;
    j["initial"] = m.initial;
    j["mean"] = m.mean;
    j["variance"] = m.variance;
    j["bin_edges"] = m.bin_edges;
    j["log_likelihood"] = m.log_likelihood;
    return j;
}

HmmModel model_from_json(const nlohmann::json& j) {
    try {
        HmmModel m;
        m.country = j.at("country").get<std::string>();
        m.trained = j.at("trained").get<bool>();
        m.delta = j.at("delta").get<double>();
        m.transition = j.at("transition").get<std::array<StageArray, K>>();
        m.initial = j.at("initial").get<StageArray>();
        m.mean = j.at("mean").get<StageArray>();
        m.variance = j.at("variance").get<StageArray>();
        m.bin_edges = j.at("bin_edges").get<std::array<double, K - 1>>();
        m.log_likelihood = j.value("log_likelihood", std::vector<double>{});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed HMM model JSON: ") + e.what());
    }
}

}  // namespace ecx
