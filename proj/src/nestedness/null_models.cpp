#include <algorithm>
#include <iterator>
#include <cmath>
#include <limits>
#include <ostream>

#include "ecx/error.hpp"
#include "ecx/nestedness.hpp"
#include "ecx/panel.hpp"
#include "ecx/random.hpp"
#include "ecx/stats.hpp"

namespace ecx {

namespace {

std::size_t fill_count(const BinaryMatrix& m) {
    return static_cast<std::size_t>(std::count_if(m.data().begin(), m.data().end(), [](auto v) { return v != 0; }));
}

BinaryMatrix equiprobable(const BinaryMatrix& m, Rng& rng) {
    const double p = static_cast<double>(fill_count(m)) / static_cast<double>(m.size());
    BinaryMatrix out(m.rows(), m.cols(), 0);
    for (auto& v : out.data()) v = uniform01(rng) < p ? 1 : 0;
    return out;
}

BinaryMatrix degree_probability(const BinaryMatrix& m, Rng& rng) {
    std::vector<double> row(m.rows(), 0.0), col(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m(i, j)) {
                row[i] += 1.0;
                col[j] += 1.0;
            }
    BinaryMatrix out(m.rows(), m.cols(), 0);
    const auto nr = static_cast<double>(m.rows()), nc = static_cast<double>(m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(i, j) = uniform01(rng) < 0.5 * (row[i] / nc + col[j] / nr) ? 1 : 0;
    return out;
}

std::size_t curveball_trades(std::vector<std::vector<std::size_t>>& rows, std::size_t trades, Rng& rng) {
    const std::size_t n = rows.size();
    if (n < 2) return 0;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> a_only, b_only, common, pool;
    std::size_t changed = 0;
    for (std::size_t t = 0; t < trades; ++t) {
        const std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        while (b == a) b = pick(rng);
        auto& ra = rows[a];
        auto& rb = rows[b];
        a_only.clear();
        b_only.clear();
        common.clear();
        std::set_difference(ra.begin(), ra.end(), rb.begin(), rb.end(), std::back_inserter(a_only));
        std::set_difference(rb.begin(), rb.end(), ra.begin(), ra.end(), std::back_inserter(b_only));
        if (a_only.empty() || b_only.empty()) continue;
        std::set_intersection(ra.begin(), ra.end(), rb.begin(), rb.end(), std::back_inserter(common));
        pool = a_only;
        pool.insert(pool.end(), b_only.begin(), b_only.end());
        std::shuffle(pool.begin(), pool.end(), rng);
        const auto split = pool.begin() + static_cast<std::ptrdiff_t>(a_only.size());
        std::vector<std::size_t> na(common), nb(common);
        na.insert(na.end(), pool.begin(), split);
        nb.insert(nb.end(), split, pool.end());
        std::sort(na.begin(), na.end());
        std::sort(nb.begin(), nb.end());
        if (na != ra) ++changed;
        ra = std::move(na);
        rb = std::move(nb);
    }
    return changed;
}

std::vector<std::vector<std::size_t>> to_lists(const BinaryMatrix& m) {
    std::vector<std::vector<std::size_t>> rows(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m(i, j)) rows[i].push_back(j);
    return rows;
}

void from_lists(const std::vector<std::vector<std::size_t>>& rows, BinaryMatrix& m) {
    std::fill(m.data().begin(), m.data().end(), std::uint8_t{0});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (auto j : rows[i]) m(i, j) = 1;
}

double lag1_autocorrelation(const std::vector<double>& x) {
    if (x.size() < 3) return std::numeric_limits<double>::quiet_NaN();
    const double mu = stats::mean(x);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        den += (x[i] - mu) * (x[i] - mu);
        if (i + 1 < x.size()) num += (x[i] - mu) * (x[i + 1] - mu);
    }
    return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string to_string(NullModel model) {
    switch (model) {
        case NullModel::EE: return "EE";
        case NullModel::DD: return "DD";
        case NullModel::FF: return "FF";
    }
    return "?";
}

NullModel parse_null_model(const std::string& name) {
    if (name == "EE") return NullModel::EE;
    if (name == "DD") return NullModel::DD;
    if (name == "FF") return NullModel::FF;
    throw ValidationError("unknown null model '" + name + "' (EE|DD|FF)");
}

std::size_t curveball(BinaryMatrix& m, std::size_t trades, std::uint64_t seed, std::uint64_t stream) {
    auto rng = substream(seed, {stream});
    auto rows = to_lists(m);
    const auto changed = curveball_trades(rows, trades, rng);
    from_lists(rows, m);
    return changed;
}

BinaryMatrix null_replicate(const BinaryMatrix& m, NullModel model, std::uint64_t seed, std::uint64_t replicate) {
    auto rng = substream(seed, {replicate});
    switch (model) {
        case NullModel::EE: return equiprobable(m, rng);
        case NullModel::DD: return degree_probability(m, rng);
        case NullModel::FF: {
            BinaryMatrix out = m;
            auto rows = to_lists(m);
            curveball_trades(rows, 5 * fill_count(m), rng);
            from_lists(rows, out);
            return out;
        }
    }
    throw ValidationError("unknown null model");
}

NullEnsemble null_ensemble(const BinaryMatrix& m, NullModel model, std::size_t count, std::uint64_t seed) {
    if (count < 2) throw ValidationError("null ensemble needs at least 2 replicates");
    if (m.rows() < 2 || m.cols() < 2) throw ValidationError("NODF needs at least a 2x2 matrix");
    NullEnsemble e;
    e.model = model;
    e.values.assign(count, 0.0);
    if (model != NullModel::FF) e.mixing_autocorrelation = std::numeric_limits<double>::quiet_NaN();
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t r = 0; r < n; ++r)
        e.values[static_cast<std::size_t>(r)] = nodf(null_replicate(m, model, seed, static_cast<std::uint64_t>(r))).nodf;
    e.mean = stats::mean(e.values);
    e.sd = stats::sample_sd(e.values);

    if (model == NullModel::FF) {
        e.degenerate = !has_checkerboard(m);
        if (e.degenerate) {
            e.warnings.push_back("degenerate ensemble: no swappable 2x2 checkerboard, every replicate equals the input");
            e.mixing_autocorrelation = std::numeric_limits<double>::quiet_NaN();
        } else {
            auto rng = substream(seed, {count, 0xcbu});
            auto rows = to_lists(m);
            BinaryMatrix scratch = m;
            const std::size_t burn = 5 * fill_count(m);
            std::vector<double> chain;
            for (std::size_t s = 0; s < std::min<std::size_t>(count, 100); ++s) {
                curveball_trades(rows, burn, rng);
                from_lists(rows, scratch);
                chain.push_back(nodf(scratch).nodf);
            }
            e.mixing_autocorrelation = lag1_autocorrelation(chain);
            if (std::fabs(e.mixing_autocorrelation) >= 0.1)
                e.warnings.push_back("curveball chain autocorrelation " + std::to_string(e.mixing_autocorrelation) +
                                     " exceeds 0.1");
        }
    }
    return e;
}

SignificanceReport significance(const NodfResult& observed, const NullEnsemble& ensemble) {
    if (ensemble.values.size() < 30) throw ValidationError("significance needs at least 30 replicates");
    SignificanceReport r;
    r.model = to_string(ensemble.model);
    r.observed = observed.nodf;
    r.null_mean = ensemble.mean;
    r.null_sd = ensemble.sd;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.mean_ratio = observed.nodf > 0.0 ? ensemble.mean / observed.nodf : nan;
    r.sd_ratio = observed.nodf > 0.0 ? ensemble.sd / observed.nodf : nan;
    if (ensemble.sd > 0.0) r.z = (observed.nodf - ensemble.mean) / ensemble.sd;
    const auto below = std::count_if(ensemble.values.begin(), ensemble.values.end(),
                                     [&](double v) { return v <= observed.nodf; });
    r.quantile = static_cast<double>(below) / static_cast<double>(ensemble.values.size());
    r.replicates = ensemble.values.size();
    r.degenerate = ensemble.degenerate;
    return r;
}

nlohmann::json to_json(const SignificanceReport& r) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["model"] = r.model;
    j["observed"] = r.observed;
    j["null_mean"] = r.null_mean;
    j["null_sd"] = r.null_sd;
    j["mean_ratio"] = num(r.mean_ratio);
    j["sd_ratio"] = num(r.sd_ratio);
    j["z"] = r.z ? num(*r.z) : nlohmann::json(nullptr);
    j["quantile"] = r.quantile;
    j["replicates"] = r.replicates;
    j["degenerate"] = r.degenerate;
    return j;
}

void write_replicates_csv(std::ostream& out, const NullEnsemble& e) {
    out << "replicate,model,nodf\n";
    for (std::size_t i = 0; i < e.values.size(); ++i)
        out << i << ',' << to_string(e.model) << ',' << format_double(e.values[i]) << '\n';
}

}  // namespace ecx
