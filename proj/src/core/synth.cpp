#include "ecx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>

#include "ecx/error.hpp"
#include "ecx/random.hpp"
#include "ecx/stats.hpp"

namespace ecx {

namespace {

std::string code(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
    return buf;
}

CountryRegistry country_codes(std::size_t n) {
    std::vector<std::string> codes;
    for (std::size_t i = 0; i < n; ++i) codes.push_back(code("C", i + 1, 3));
    return CountryRegistry::from_codes(std::move(codes));
}

ProductRegistry product_codes(std::size_t n) {
    if (n > 9999) throw ValidationError("synthetic panels support at most 9999 products");
    std::vector<std::string> codes;
    for (std::size_t i = 0; i < n; ++i) codes.push_back(code("", i + 1, 4));
    return ProductRegistry::from_codes(std::move(codes));
}

GdpPanel synthetic_gdp(std::size_t countries, std::size_t years, int first_year) {
    Matrix<double> g(countries, years);
    for (std::size_t c = 0; c < countries; ++c) {
        const double frac = countries > 1 ? static_cast<double>(c) / static_cast<double>(countries - 1) : 0.0;
        for (std::size_t t = 0; t < years; ++t)
            g(c, t) = std::pow(10.0, 3.0 + 2.0 * (1.0 - frac)) * std::pow(1.02, static_cast<double>(t));
    }
    return GdpPanel(country_codes(countries), first_year, std::move(g));
}

SynthPanel make_nested(const SynthSpec& spec, std::uint64_t seed) {
    auto rng = substream(seed, {1});
    std::bernoulli_distribution flip(spec.noise);
    const auto clean = stairstep(spec.countries, spec.products);
    SynthPanel out;
    std::vector<Matrix<double>> slices;
    for (std::size_t t = 0; t < spec.years; ++t) {
        BinaryMatrix m = clean;
        for (auto& v : m.data())
            if (spec.noise > 0.0 && flip(rng)) v ^= 1;
        Matrix<double> e(spec.countries, spec.products, 0.0);
        for (std::size_t c = 0; c < spec.countries; ++c)
            for (std::size_t p = 0; p < spec.products; ++p) e(c, p) = m(c, p) ? 1000.0 : 0.0;
        slices.push_back(std::move(e));
        out.truth.push_back(clean);
        out.mcp.push_back(std::move(m));
    }
    out.exports.emplace(country_codes(spec.countries), product_codes(spec.products), spec.first_year,
                        std::move(slices), 4);
    out.gdp.emplace(synthetic_gdp(spec.countries, spec.years, spec.first_year));
    return out;
}

BinaryMatrix corner_cut_stairstep(const SynthSpec& spec) {
    auto m = stairstep(spec.countries, spec.products);
    const auto rows = static_cast<std::size_t>(spec.corner * static_cast<double>(spec.countries));
    const auto cols = static_cast<std::size_t>(spec.corner * static_cast<double>(spec.products));
    for (std::size_t c = 0; c < rows; ++c)
        for (std::size_t p = 0; p < cols; ++p) m(c, p) = 0;
    return m;
}

SynthPanel make_flicker(const SynthSpec& spec, std::uint64_t seed) {
    if (!(spec.noise >= 0.0 && spec.noise < 0.5)) throw ValidationError("flicker noise rate must lie in [0, 0.5)");
    const std::size_t nc = spec.countries, np = spec.products;
    const auto before = corner_cut_stairstep(spec);
    auto after = before;

    SynthPanel out;
    out.switched_countries.assign(nc, -1);
    auto pick = substream(seed, {2});
    if (spec.switch_year >= 0 && static_cast<std::size_t>(spec.switch_year) < spec.years) {
        std::vector<std::size_t> rows(nc);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        std::shuffle(rows.begin(), rows.end(), pick);
        const auto n = static_cast<std::size_t>(std::lround(spec.switch_fraction * static_cast<double>(nc)));
        for (std::size_t i = 0; i < std::min(n, nc); ++i) {
            const auto c = rows[i];
            std::size_t frontier = 0;
            for (std::size_t p = 0; p < np; ++p)
                if (after(c, p)) frontier = p;
            if (frontier + 1 >= np) continue;
            after(c, frontier + 1) = 1;
            out.switched_countries[c] = spec.switch_year;
        }
    }
    const auto design_before = balanced_design(before, spec.margin);
    const auto design_after = after == before ? design_before : balanced_design(after, spec.margin);

    const double sigma = spec.noise > 0.0 ? spec.margin / stats::normal_quantile(1.0 - spec.noise) : 0.0;
    auto rng = substream(seed, {3});
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Matrix<double>> slices;
    for (std::size_t t = 0; t < spec.years; ++t) {
        const bool switched = spec.switch_year >= 0 && t >= static_cast<std::size_t>(spec.switch_year);
        const auto& design = switched ? design_after : design_before;
        Matrix<double> e(nc, np);
        for (std::size_t i = 0; i < e.size(); ++i) e.data()[i] = design.data()[i] * std::exp(sigma * gauss(rng));
        slices.push_back(std::move(e));
        out.truth.push_back(switched ? after : before);
    }
    out.exports.emplace(country_codes(nc), product_codes(np), spec.first_year, std::move(slices), 4);
    out.gdp.emplace(synthetic_gdp(nc, spec.years, spec.first_year));
    return out;
}

struct BowlField {
    double curvature, tilt, strength;
    double ridge(double x) const { return 1.0 + tilt * (x - 1.0); }
    double h(double x, double y) const {
        const double dy = y - ridge(x);
        return 0.1 + curvature * ((x - 1.0) * (x - 1.0) + dy * dy);
    }
    std::pair<double, double> gradient(double x, double y) const {
        const double dy = y - ridge(x);
        return {2.0 * curvature * (x - 1.0) - 2.0 * curvature * tilt * dy, 2.0 * curvature * dy};
    }
};

SynthPanel make_drift(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.field != "none" && spec.field != "constant" && spec.field != "bowl")
        throw ValidationError("unknown drift field '" + spec.field + "' (none|constant|bowl)");
    const BowlField bowl{spec.curvature, spec.tilt, spec.strength};
    auto rng = substream(seed, {4});
    std::uniform_real_distribution<double> start(0.5, 1.5);
    std::normal_distribution<double> gauss(0.0, 1.0);

    TrajectorySet set;
    for (std::size_t e = 0; e < spec.products; ++e) set.entities.push_back(code("P", e + 1, 4));
    std::vector<std::pair<double, double>> pos(spec.products);
    for (auto& p : pos) {
        p.first = start(rng);
        p.second = start(rng);
    }
    for (std::size_t t = 0; t < spec.years; ++t) {
        const int year = spec.first_year + static_cast<int>(t);
        for (std::size_t e = 0; e < spec.products; ++e) {
            auto& [x, y] = pos[e];
            set.points.push_back({e, year, x, y});
            set.scalars.push_back({e, year, bowl.h(x, y) + spec.h_noise * gauss(rng)});
        }
        for (std::size_t e = 0; e < spec.products; ++e) {
            auto& [x, y] = pos[e];
            double dx = 0.0, dy = 0.0;
            if (spec.field == "constant") {
                dx = spec.drift_x;
                dy = spec.drift_y;
            } else if (spec.field == "bowl") {
                const auto [gx, gy] = bowl.gradient(x, y);
                dx = -spec.strength * gx;
                dy = -spec.strength * gy;
            }
            x += dx + spec.diffusion * gauss(rng);
            y += dy + spec.diffusion * gauss(rng);
        }
    }
    SynthPanel out;
    out.trajectories = std::move(set);
    return out;
}

}  // namespace

void SynthSpec::set(const std::string& key, const std::string& value) {
    auto num = [&](double& field) {
        try {
            std::size_t used = 0;
            field = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw ValidationError("synth parameter '" + key + "' expects a number, got '" + value + "'");
        }
    };
    auto count = [&](std::size_t& field) {
        double v = 0.0;
        num(v);
        if (v < 1 || v != std::floor(v)) throw ValidationError("synth parameter '" + key + "' expects a positive integer");
        field = static_cast<std::size_t>(v);
    };
    auto integer = [&](int& field) {
        double v = 0.0;
        num(v);
        if (v != std::floor(v)) throw ValidationError("synth parameter '" + key + "' expects an integer");
        field = static_cast<int>(v);
    };
    if (key == "generator") generator = value;
    else if (key == "countries") count(countries);
    else if (key == "products") count(products);
    else if (key == "years") count(years);
    else if (key == "first_year") integer(first_year);
    else if (key == "noise") num(noise);
    else if (key == "switch_year") integer(switch_year);
    else if (key == "switch_fraction") num(switch_fraction);
    else if (key == "margin") num(margin);
    else if (key == "corner") num(corner);
    else if (key == "field") field = value;
    else if (key == "drift_x") num(drift_x);
    else if (key == "drift_y") num(drift_y);
    else if (key == "strength") num(strength);
    else if (key == "curvature") num(curvature);
    else if (key == "tilt") num(tilt);
    else if (key == "diffusion") num(diffusion);
    else if (key == "h_noise") num(h_noise);
    else throw ValidationError("unknown synth parameter '" + key + "'");
}

nlohmann::json SynthSpec::to_json() const {
    nlohmann::json j;
    j["generator"] = generator;
    j["countries"] = countries;
    j["products"] = products;
    j["years"] = years;
    j["first_year"] = first_year;
    j["noise"] = noise;
    if (generator == "flicker") {
        j["switch_year"] = switch_year;
        j["switch_fraction"] = switch_fraction;
        j["margin"] = margin;
        j["corner"] = corner;
    }
    if (generator == "drift") {
        j["field"] = field;
        j["drift_x"] = drift_x;
        j["drift_y"] = drift_y;
        j["strength"] = strength;
        j["curvature"] = curvature;
        j["tilt"] = tilt;
        j["diffusion"] = diffusion;
        j["h_noise"] = h_noise;
    }
    return j;
}

BinaryMatrix stairstep(std::size_t rows, std::size_t cols) {
    BinaryMatrix m(rows, cols, 0);
    for (std::size_t c = 0; c < rows; ++c)
        for (std::size_t p = 0; p < cols; ++p) m(c, p) = p * rows < (rows - c) * cols ? 1 : 0;
    return m;
}

Matrix<double> balanced_design(const BinaryMatrix& pattern, double margin) {
    const std::size_t nc = pattern.rows(), np = pattern.cols();
    constexpr double floor_value = 0.02;
    const double high = std::exp(margin), low = std::exp(-margin);
    Matrix<double> x(nc, np);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = pattern.data()[i] ? 1.5 * high : 0.3;

    // Alternating projections between the affine set {row sums = np, column
    // sums = nc} and the box of admissible values.
    std::vector<double> row(nc), col(np);
    for (int it = 0; it < 200000; ++it) {
        double total = 0.0;
        std::fill(col.begin(), col.end(), 0.0);
        for (std::size_t c = 0; c < nc; ++c) {
            double s = 0.0;
            for (std::size_t p = 0; p < np; ++p) {
                s += x(c, p);
                col[p] += x(c, p);
            }
            row[c] = s - static_cast<double>(np);
            total += s;
        }
        const double excess = total - static_cast<double>(nc * np);
        double moved = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            for (std::size_t p = 0; p < np; ++p) {
                double v = x(c, p) - row[c] / static_cast<double>(np) - (col[p] - static_cast<double>(nc)) /
                           static_cast<double>(nc) + excess / static_cast<double>(nc * np);
                const double clipped = pattern(c, p) ? std::max(v, high) : std::clamp(v, floor_value, low);
                moved = std::max(moved, std::fabs(clipped - v));
                x(c, p) = clipped;
            }
        }
        if (moved < 1e-12) return x;
    }
    throw ComputationError("no balanced RCA design exists for this pattern and margin");
}

SynthPanel synth_panel(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.countries < 2 || spec.products < 2) throw ValidationError("synthetic panels need at least 2x2 entities");
    if (spec.noise < 0.0 || spec.noise > 1.0) throw ValidationError("noise rate must lie in [0, 1]");
    SynthPanel out;
    if (spec.generator == "nested") out = make_nested(spec, seed);
    else if (spec.generator == "flicker") out = make_flicker(spec, seed);
    else if (spec.generator == "drift") out = make_drift(spec, seed);
    else throw ValidationError("unknown generator '" + spec.generator + "' (nested|flicker|drift)");
    out.provenance = {{"generator", spec.generator}, {"seed", seed}, {"parameters", spec.to_json()}};
    return out;
}

}  // namespace ecx
