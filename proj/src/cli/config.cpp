#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ecx/config.hpp"
#include "ecx/error.hpp"

namespace ecx {

namespace {

using K = RunConfig::Kind;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
bool parse_exact(const std::string& s, T& out) {
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

void check(const RunConfig::Key& key, const std::string& value) {
    auto fail = [&](const std::string& what) {
        throw ValidationError("config key '" + key.name + "': " + what + ", got '" + value + "'");
    };
    auto is_choice = [&](const std::string& v) {
        return std::find(key.choices.begin(), key.choices.end(), v) != key.choices.end();
    };
    switch (key.kind) {
        case K::Text:
        case K::Path:
            if (value.find('\n') != std::string::npos) fail("values cannot span lines");
            break;
        case K::Integer: {
            long long v = 0;
            if (!parse_exact(value, v)) fail("expected an integer");
            break;
        }
        case K::Count: {
            unsigned long long v = 0;
            if (!parse_exact(value, v) || v == 0) fail("expected a positive integer");
            break;
        }
        case K::Seed: {
            std::uint64_t v = 0;
            if (!parse_exact(value, v)) fail("expected a non-negative integer");
            break;
        }
        case K::Real: {
            double v = 0.0;
            if (!parse_exact(value, v) || !std::isfinite(v)) fail("expected a finite number");
            break;
        }
        case K::IntegerList:
        case K::CountList: {
            const auto items = split_list(value);
            if (items.empty()) fail("expected a comma-separated list");
            for (const auto& item : items) {
                long long v = 0;
                if (!parse_exact(item, v) || (key.kind == K::CountList && v <= 0))
                    fail(key.kind == K::CountList ? "expected positive integers" : "expected integers");
            }
            break;
        }
        case K::Choice:
            if (!is_choice(value)) fail("expected one of the documented choices");
            break;
        case K::ChoiceList: {
            const auto items = split_list(value);
            if (items.empty()) fail("expected a comma-separated list");
            for (const auto& item : items)
                if (!is_choice(item)) fail("unknown item '" + item + "'");
            break;
        }
    }
}

}  // namespace

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

const std::vector<RunConfig::Key>& RunConfig::schema() {
    static const std::vector<Key> keys = {
        {"exports", K::Path, "", "export panel CSV (year,country,product,value)", {}},
        {"gdp", K::Path, "", "GDP per capita CSV (year,country,gdppc)", {}},
        {"matrices", K::Text, "", "binary matrix CSVs for nestedness, comma-separated, optionally label=path", {}},
        {"trajectories", K::Path, "", "plane trajectories CSV (entity,year,x,y,h)", {}},
        {"output", K::Path, "", "output directory", {}},
        {"digit_level", K::Choice, "4", "product code digits", {"4", "6"}},
        {"regularization", K::Choice, "threshold", "Mcp construction", {"threshold", "hmm"}},
        {"binarization", K::Choice, "expected-rca", "HMM stage binarization rule", {"expected-rca", "top2"}},
        {"hmm_restarts", K::Count, "3", "Baum-Welch restarts per country", {}},
        {"grid_nx", K::Count, "20", "grid columns", {}},
        {"grid_ny", K::Count, "20", "grid rows", {}},
        {"min_count", K::Count, "5", "samples needed to populate a cell", {}},
        {"coordinates", K::Choice, "tied-rank", "plane coordinate convention", {"tied-rank", "raw"}},
        {"sigma", K::Real, "0", "kernel bandwidth, 0 for 0.1 x analogue bounding-box diagonal", {}},
        {"bootstraps", K::Count, "1000", "SPSb bootstrap count B", {}},
        {"samples", K::Count, "100", "SPSb samples per bootstrap N", {}},
        {"seed", K::Seed, "0", "master seed", {}},
        {"horizons", K::CountList, "3,4,5", "backtest horizons in years", {}},
        {"methods", K::ChoiceList, "spsb,nwkr,random,static,autocorrelation", "backtest methods",
         {"spsb", "nwkr", "random", "static", "autocorrelation"}},
        {"metric_names", K::Text, "x,y", "names of the two plane coordinates in backtest reports", {}},
        {"null_models", K::ChoiceList, "EE,DD,FF", "nestedness null models", {"EE", "DD", "FF"}},
        {"null_replicates", K::Count, "100", "replicates per null model", {}},
        {"minima_bootstrap", K::Count, "200", "bootstrap resamples for minima lines", {}},
        {"schedule", K::CountList, "100,1000,10000,100000", "bootstrap counts for the convergence scan", {}},
        {"queries", K::Count, "30", "queries in the convergence scan", {}},
        {"converge_dt", K::Count, "1", "displacement horizon of the convergence analogues", {}},
        {"synth_generator", K::Choice, "nested", "synthetic generator", {"nested", "flicker", "drift"}},
        {"synth_countries", K::Count, "20", "synthetic countries", {}},
        {"synth_products", K::Count, "30", "synthetic products (drift: entities)", {}},
        {"synth_years", K::Count, "20", "synthetic years", {}},
        {"synth_first_year", K::Integer, "2000", "first synthetic year", {}},
        {"synth_noise", K::Real, "0", "synthetic noise rate", {}},
        {"synth_switch_year", K::Integer, "10", "flicker regime change year index (-1 for none)", {}},
        {"synth_switch_fraction", K::Real, "0.25", "flicker share of switching countries", {}},
        {"synth_margin", K::Real, "0.3", "flicker log-RCA margin around the threshold", {}},
        {"synth_corner", K::Real, "0.5", "flicker removed corner fraction", {}},
        {"synth_field", K::Choice, "bowl", "drift field", {"none", "constant", "bowl"}},
        {"synth_drift_x", K::Real, "0", "constant drift along x", {}},
        {"synth_drift_y", K::Real, "0", "constant drift along y", {}},
        {"synth_strength", K::Real, "0.05", "bowl drift coefficient k", {}},
        {"synth_curvature", K::Real, "1", "bowl curvature", {}},
        {"synth_tilt", K::Real, "0.2", "bowl minimum line slope", {}},
        {"synth_diffusion", K::Real, "0", "Brownian step standard deviation", {}},
        {"synth_h_noise", K::Real, "0", "noise on the synthetic H values", {}},
    };
    return keys;
}

const RunConfig::Key* RunConfig::find_key(const std::string& name) {
    for (const auto& k : schema())
        if (k.name == name) return &k;
    return nullptr;
}

RunConfig::RunConfig() {
    for (const auto& k : schema()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
    const auto* spec = find_key(key);
    if (!spec) throw ValidationError("unknown config key '" + key + "'");
    const auto value = trim(raw);
    if (!(value.empty() && (spec->kind == K::Text || spec->kind == K::Path))) check(*spec, value);
    values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("unknown config key '" + key + "'");
    return it->second;
}

long long RunConfig::integer(const std::string& key) const {
    long long v = 0;
    parse_exact(get(key), v);
    return v;
}

std::size_t RunConfig::count(const std::string& key) const {
    unsigned long long v = 0;
    parse_exact(get(key), v);
    return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::seed() const {
    std::uint64_t v = 0;
    parse_exact(get("seed"), v);
    return v;
}

double RunConfig::real(const std::string& key) const {
    double v = 0.0;
    parse_exact(get(key), v);
    return v;
}

std::vector<long long> RunConfig::integers(const std::string& key) const {
    std::vector<long long> out;
    for (const auto& item : split_list(get(key))) {
        long long v = 0;
        parse_exact(item, v);
        out.push_back(v);
    }
    return out;
}

std::vector<std::size_t> RunConfig::counts(const std::string& key) const {
    std::vector<std::size_t> out;
    for (auto v : integers(key)) out.push_back(static_cast<std::size_t>(v));
    return out;
}

std::vector<std::string> RunConfig::list(const std::string& key) const { return split_list(get(key)); }

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
    RunConfig cfg;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(source, n, "expected key=value");
        try {
            cfg.set(trim(t.substr(0, eq)), t.substr(eq + 1));
        } catch (const ValidationError& e) {
            throw ParseError(source, n, e.what());
        }
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path.string());
    return parse(in, path.string());
}

void RunConfig::write(std::ostream& out) const {
    for (const auto& k : schema()) out << k.name << '=' << values_.at(k.name) << '\n';
}

void RunConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    write(out);
}

}  // namespace ecx
