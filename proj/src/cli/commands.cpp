#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ecx/cli.hpp"
#include "ecx/error.hpp"
#include "ecx/forecast.hpp"
#include "ecx/hmm.hpp"
#include "ecx/mcp_io.hpp"
#include "ecx/metrics.hpp"
#include "ecx/nestedness.hpp"
#include "ecx/panel.hpp"
#include "ecx/plane.hpp"
#include "ecx/random.hpp"
#include "ecx/stats.hpp"
#include "ecx/svg.hpp"
#include "ecx/synth.hpp"
#include "ecx/trajectory.hpp"

namespace ecx::cli {

namespace fs = std::filesystem;

namespace {

fs::path output_dir(const RunConfig& cfg) { return fs::path(cfg.get("output")); }

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
    const auto path = output_dir(cfg) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    return out;
}

void write_text(const RunConfig& cfg, const std::string& name, const std::string& text) {
    auto out = open_output(cfg, name);
    out << text;
}

void write_json(const RunConfig& cfg, const std::string& name, const nlohmann::json& j) {
    write_text(cfg, name, j.dump(2) + "\n");
}

fs::path require_path(const RunConfig& cfg, const std::string& key) {
    const auto& p = cfg.get(key);
    if (p.empty()) throw ValidationError("missing required input '" + key + "'");
    if (!fs::exists(p)) throw InputError("input path does not exist: " + p + " (" + key + ")");
    return p;
}

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

ExportPanel load_exports(const RunConfig& cfg) {
    return load_export_csv(require_path(cfg, "exports"), static_cast<int>(cfg.integer("digit_level")));
}

HmmOptions hmm_options(const RunConfig& cfg) {
    HmmOptions o;
    o.restarts = cfg.count("hmm_restarts");
    o.seed = cfg.seed();
    return o;
}

std::vector<BinaryExportMatrix> thresholded(const ExportPanel& panel) {
    std::vector<BinaryExportMatrix> out;
    for (int year : panel.years()) out.push_back(threshold_mcp(compute_rca(panel, year)));
    return out;
}

// label=path items; the label defaults to the file's parent directory name.
std::vector<std::pair<std::string, fs::path>> datasets(const RunConfig& cfg) {
    std::vector<std::pair<std::string, fs::path>> out;
    for (const auto& item : cfg.list("matrices")) {
        const auto eq = item.find('=');
        fs::path path = eq == std::string::npos ? item : item.substr(eq + 1);
        std::string label = eq == std::string::npos ? path.parent_path().filename().string() : item.substr(0, eq);
        if (label.empty()) label = path.stem().string();
        if (!fs::exists(path)) throw InputError("input path does not exist: " + path.string() + " (matrices)");
        out.emplace_back(label, path);
    }
    return out;
}

TrajectorySet to_plane(const TrajectorySet& raw, CoordinateConvention convention) {
    if (convention == CoordinateConvention::Raw || raw.points.empty()) return raw;
    int first = raw.points.front().year, last = first;
    for (const auto& p : raw.points) {
        first = std::min(first, p.year);
        last = std::max(last, p.year);
    }
    const auto years = static_cast<std::size_t>(last - first + 1);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> xs(years, std::vector<double>(raw.entities.size(), nan)), ys = xs;
    for (const auto& p : raw.points) {
        xs[static_cast<std::size_t>(p.year - first)][p.entity] = p.x;
        ys[static_cast<std::size_t>(p.year - first)][p.entity] = p.y;
    }
    TrajectorySet out = raw;
    out.points = plane_points(xs, ys, first, convention);
    return out;
}

SynthSpec synth_spec(const RunConfig& cfg) {
    SynthSpec spec;
    for (const auto& key : RunConfig::schema())
        if (key.name.rfind("synth_", 0) == 0) spec.set(key.name.substr(6), cfg.get(key.name));
    return spec;
}

}  // namespace

void cmd_synth(const RunConfig& cfg, std::ostream& log) {
    const auto spec = synth_spec(cfg);
    const auto panel = synth_panel(spec, cfg.seed());
    auto provenance = panel.provenance;
    if (panel.exports) {
        auto out = open_output(cfg, "exports.csv");
        write_export_csv(*panel.exports, out);
        auto gdp = open_output(cfg, "gdp.csv");
        write_gdp_csv(*panel.gdp, gdp);
        McpSeries truth{panel.exports->countries(), panel.exports->products(), panel.exports->first_year(), {}};
        for (const auto& m : panel.truth) truth.years.push_back({m, MatrixProvenance::Thresholded});
        write_mcp(truth, output_dir(cfg) / "truth.csv");
        if (!panel.mcp.empty()) {
            McpSeries noisy = truth;
            noisy.years.clear();
            for (const auto& m : panel.mcp) noisy.years.push_back({m, MatrixProvenance::Thresholded});
            write_mcp(noisy, output_dir(cfg) / "mcp.csv");
        }
        nlohmann::json switched = nlohmann::json::object();
        for (std::size_t c = 0; c < panel.switched_countries.size(); ++c)
            if (panel.switched_countries[c] >= 0)
                switched[panel.exports->countries().code(c)] = panel.exports->first_year() + panel.switched_countries[c];
        provenance["switched_countries"] = switched;
    }
    if (panel.trajectories) {
        auto out = open_output(cfg, "trajectories.csv");
        write_trajectories_csv(*panel.trajectories, out);
    }
    write_json(cfg, "provenance.json", provenance);
    log << "synth: wrote " << spec.generator << " panel to " << cfg.get("output") << '\n';
}

void cmd_regularize(const RunConfig& cfg, std::ostream& log) {
    const auto panel = load_exports(cfg);
    McpSeries series{panel.countries(), panel.products(), panel.first_year(), thresholded(panel)};
    nlohmann::json flips;
    flips["thresholded_mean_flips"] = mean_flip_count(series.years);
    if (cfg.get("regularization") == "hmm") {
        const auto reg = regularize_panel(panel, hmm_options(cfg), parse_binarization_rule(cfg.get("binarization")));
        const auto models_dir = output_dir(cfg) / "models";
        fs::create_directories(models_dir);
        for (std::size_t c = 0; c < reg.models.size(); ++c) {
            std::ofstream out(models_dir / (panel.countries().code(c) + ".json"), std::ios::binary);
            if (!out) throw InputError("cannot write model sidecar for " + panel.countries().code(c));
            out << to_json(reg.models[c]).dump(2) << '\n';
        }
        series.years = reg.matrices;
        flips["regularized_mean_flips"] = mean_flip_count(series.years);
        flips["untrained_countries"] = reg.untrained;
        for (const auto& c : reg.untrained) log << "regularize: warning: no model for " << c << ", thresholded instead\n";
    }
    flips["mode"] = cfg.get("regularization");
    write_mcp(series, output_dir(cfg) / "mcp.csv");
    write_json(cfg, "flips.json", flips);
    log << "regularize: " << series.years.size() << " matrices (" << cfg.get("regularization") << ")\n";
}

void cmd_metrics(const RunConfig& cfg, std::ostream& log) {
    const auto panel = load_exports(cfg);
    std::optional<GdpPanel> gdp;
    if (!cfg.get("gdp").empty()) gdp = load_gdp_csv(require_path(cfg, "gdp"));

    std::vector<BinaryExportMatrix> mcp;
    const auto sets = datasets(cfg);
    if (sets.size() > 1) throw ValidationError("metrics takes at most one matrix file");
    if (!sets.empty()) {
        auto series = load_mcp(sets.front().second);
        if (!(series.countries == panel.countries()) || !(series.products == panel.products()) ||
            series.first_year != panel.first_year() || series.years.size() != panel.year_count())
            throw ValidationError("matrix file does not match the export panel");
        mcp = std::move(series.years);
    } else if (cfg.get("regularization") == "hmm") {
        mcp = regularize_panel(panel, hmm_options(cfg), parse_binarization_rule(cfg.get("binarization"))).matrices;
    } else {
        mcp = thresholded(panel);
    }

    const std::vector<std::string> countries(panel.countries().codes().begin(), panel.countries().codes().end());
    const std::vector<std::string> products(panel.products().codes().begin(), panel.products().codes().end());
    auto fitness = open_output(cfg, "fitness.csv");
    auto complexity = open_output(cfg, "complexity.csv");
    auto herfindahl = open_output(cfg, "herfindahl.csv");
    auto summary = open_output(cfg, "rca_summary.csv");
    std::ofstream logprody;
    if (gdp) logprody = open_output(cfg, "logprody.csv");
    summary << "year,active_countries,active_products,mcp_fill,mean_rca,fc_iterations,fc_converged,fc_rank_stable\n";

    TrajectorySet traj;
    traj.entities = products;
    const auto years = panel.years();
    for (std::size_t t = 0; t < years.size(); ++t) {
        const int year = years[t];
        const auto rca = compute_rca(panel, year);
        const auto fc = fitness_complexity_pruned(mcp[t].m);
        const auto pruned = prune_empty(mcp[t].m);
        std::vector<double> f(countries.size(), std::numeric_limits<double>::quiet_NaN());
        std::vector<double> q(products.size(), std::numeric_limits<double>::quiet_NaN());
        for (auto c : pruned.kept_rows) f[c] = fc.fitness[c];
        for (auto p : pruned.kept_cols) q[p] = fc.complexity[p];
        write_metric_csv(fitness, year, countries, f, t == 0);
        write_metric_csv(complexity, year, products, q, t == 0);
        const auto h = compute_herfindahl(panel, year);
        write_metric_csv(herfindahl, year, products, h.values, t == 0);

        std::size_t active_c = 0, active_p = 0, ones = 0;
        double rca_sum = 0.0;
        for (std::size_t c = 0; c < countries.size(); ++c) active_c += rca.zero_country[c] ? 0 : 1;
        for (std::size_t p = 0; p < products.size(); ++p) active_p += rca.zero_product[p] ? 0 : 1;
        for (auto v : mcp[t].m.data()) ones += v ? 1 : 0;
        for (double v : rca.values.data()) rca_sum += v;
        summary << year << ',' << active_c << ',' << active_p << ','
                << format_double(static_cast<double>(ones) / static_cast<double>(mcp[t].m.size())) << ','
                << format_double(rca_sum / static_cast<double>(rca.values.size())) << ',' << fc.iterations << ','
                << (fc.converged ? 1 : 0) << ',' << (fc.rank_stable ? 1 : 0) << '\n';
        if (!fc.converged) log << "metrics: " << year << ": Fitness-Complexity stopped after " << fc.iterations
                               << " iterations without meeting the value tolerance\n";

        if (gdp) {
            const auto lp = compute_logprody(rca, panel.countries(), *gdp, year);
            write_metric_csv(logprody, year, products, lp.values, t == 0);
            for (const auto& c : lp.dropped_countries) log << "metrics: " << year << ": no GDP for exporter " << c << '\n';
            for (std::size_t p = 0; p < products.size(); ++p) {
                if (!std::isfinite(q[p]) || !std::isfinite(lp.values[p]) || !std::isfinite(h.values[p])) continue;
                traj.points.push_back({p, year, q[p], lp.values[p]});
                traj.scalars.push_back({p, year, h.values[p]});
            }
        }
    }
    if (gdp) {
        auto out = open_output(cfg, "trajectories.csv");
        write_trajectories_csv(traj, out);
    } else {
        log << "metrics: no GDP input, logPRODY and trajectories skipped\n";
    }
    log << "metrics: " << years.size() << " years processed\n";
}

void cmd_analyze(const RunConfig& cfg, std::ostream& log) {
    const bool has_traj = !cfg.get("trajectories").empty();
    const auto sets = datasets(cfg);
    if (!has_traj && sets.empty()) throw ValidationError("analyze needs 'trajectories' or 'matrices'");

    if (has_traj) {
        const auto convention = parse_coordinate_convention(cfg.get("coordinates"));
        const auto raw = load_trajectories_csv(require_path(cfg, "trajectories"));
        const auto plane = to_plane(raw, convention);
        GridSpec grid;
        if (convention == CoordinateConvention::Raw)
            grid = covering_grid(plane.points, cfg.count("grid_nx"), cfg.count("grid_ny"), cfg.count("min_count"));
        grid.nx = cfg.count("grid_nx");
        grid.ny = cfg.count("grid_ny");
        grid.min_count = cfg.count("min_count");

        const auto moves = displacements(plane.points);
        const auto v = build_velocity_field(std::span<const Displacement>(moves), grid);
        const std::size_t boots = cfg.count("minima_bootstrap");
        const auto v_line = minima_line(std::span<const Displacement>(moves), grid, boots, cfg.seed());
        write_text(cfg, "quiver.svg", svg::quiver(v, "Average displacement", v_line.smoothed));
        write_text(cfg, "vy_heatmap.svg", svg::heatmap(v.vy, grid, "Vertical velocity"));
        {
            auto out = open_output(cfg, "minima_velocity.csv");
            write_minima_csv(out, v_line, grid);
        }

        nlohmann::json fit_json;
        fit_json["coordinates"] = to_string(convention);
        fit_json["grid"] = {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"y_min", grid.y_min},
                            {"y_max", grid.y_max}, {"nx", grid.nx},      {"ny", grid.ny},
                            {"min_count", grid.min_count}};
        fit_json["velocity_cells"] = v.populated_cells();
        fit_json["minima_degenerate"] = v_line.degenerate;
        PlaneField h = v;
        if (!plane.scalars.empty()) {
            const auto values = join_scalars(plane.points, plane.scalars);
            h = build_h_field(std::span<const PositionedValue>(values), grid);
            const auto h_line = minima_line(std::span<const PositionedValue>(values), grid, boots, cfg.seed());
            auto out = open_output(cfg, "minima_h.csv");
            write_minima_csv(out, h_line, grid);
            write_text(cfg, "h_heatmap.svg", svg::heatmap(h.h, grid, "Herfindahl field"));
            try {
                const auto fit = fit_gradient_model(v, h);
                fit_json["k_x"] = fit.x.k;
                fit_json["k_y"] = fit.y.k;
                fit_json["r_squared_x"] = number(fit.x.r_squared);
                fit_json["r_squared_y"] = number(fit.y.r_squared);
                fit_json["cells"] = fit.cells;
            } catch (const ComputationError& e) {
                fit_json["error"] = e.what();
                log << "analyze: gradient fit skipped: " << e.what() << '\n';
            }
        }
        {
            auto out = open_output(cfg, "grid.csv");
            write_grid_csv(out, v, h);
        }
        write_json(cfg, "fit.json", fit_json);
    }

    if (!sets.empty()) {
        auto table = open_output(cfg, "nestedness.csv");
        table << "dataset,year,nodf,row_part,column_part\n";
        std::vector<std::string> labels;
        std::vector<double> means;
        nlohmann::json reports = nlohmann::json::array();
        for (const auto& [label, path] : sets) {
            const auto series = load_mcp(path);
            if (series.years.empty()) throw ValidationError(path.string() + " holds no matrices");
            double total = 0.0;
            for (std::size_t t = 0; t < series.years.size(); ++t) {
                const auto r = nodf(series.years[t].m);
                total += r.nodf;
                table << label << ',' << series.first_year + static_cast<int>(t) << ',' << format_double(r.nodf) << ','
                      << format_double(r.row_part) << ',' << format_double(r.column_part) << '\n';
            }
            labels.push_back(label);
            means.push_back(total / static_cast<double>(series.years.size()));

            const auto& last = series.years.back().m;
            const auto observed = nodf(last);
            for (const auto& name : cfg.list("null_models")) {
                const auto model = parse_null_model(name);
                const auto ensemble = null_ensemble(last, model, cfg.count("null_replicates"), cfg.seed());
                for (const auto& w : ensemble.warnings) log << "analyze: " << label << " " << name << ": " << w << '\n';
                auto out = open_output(cfg, "replicates_" + label + "_" + name + ".csv");
                write_replicates_csv(out, ensemble);
                nlohmann::json j = ensemble.values.size() >= 30 ? to_json(significance(observed, ensemble))
                                                                : nlohmann::json{{"model", name}, {"error", "fewer than 30 replicates"}};
                j["dataset"] = label;
                j["year"] = series.first_year + static_cast<int>(series.years.size()) - 1;
                j["mixing_autocorrelation"] = number(ensemble.mixing_autocorrelation);
                reports.push_back(j);
            }
        }
        write_json(cfg, "significance.json", reports);
        write_text(cfg, "nodf_bars.svg", svg::bars(labels, means, "Mean NODF per dataset", "NODF"));
    }
    log << "analyze: done\n";
}

void cmd_backtest(const RunConfig& cfg, std::ostream& log) {
    const auto set = load_trajectories_csv(require_path(cfg, "trajectories"));
    BacktestParams params;
    params.methods.clear();
    for (const auto& m : cfg.list("methods")) params.methods.push_back(parse_forecast_method(m));
    params.horizons.clear();
    for (auto h : cfg.integers("horizons")) params.horizons.push_back(static_cast<int>(h));
    params.sigma = cfg.real("sigma");
    if (params.sigma < 0.0) throw ValidationError("sigma must be non-negative");
    params.bootstraps = cfg.count("bootstraps");
    params.samples = cfg.count("samples");
    params.seed = cfg.seed();
    const auto names = cfg.list("metric_names");
    if (names.size() != 2) throw ValidationError("metric_names needs exactly two names");
    params.metric_names = {names[0], names[1]};

    const auto report = backtest(set, params);
    {
        auto out = open_output(cfg, "backtest.csv");
        write_backtest_csv(out, report);
    }
    write_json(cfg, "backtest_summary.json", backtest_summary(report));
    if (report.audit.violations > 0) throw ComputationError("leakage audit found analogues from the forecast window");
    log << "backtest: " << report.rows.size() << " forecasts\n";
}

void cmd_converge(const RunConfig& cfg, std::ostream& log) {
    AnalogueSet set;
    std::vector<Vec2> queries;
    const std::size_t n_queries = cfg.count("queries");
    if (!cfg.get("trajectories").empty()) {
        const auto traj = load_trajectories_csv(require_path(cfg, "trajectories"));
        int last = std::numeric_limits<int>::min();
        for (const auto& p : traj.points) last = std::max(last, p.year);
        set = analogues_before(traj, last, static_cast<int>(cfg.count("converge_dt")));
        for (const auto& p : traj.points)
            if (p.year == last && queries.size() < n_queries) queries.push_back({p.x, p.y});
    } else {
        // Built-in fixture: one-dimensional displacements around 1 with a smooth trend.
        auto rng = substream(cfg.seed(), {0xc0});
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::normal_distribution<double> noise(0.0, 0.3);
        set.dimension = 1;
        for (std::size_t i = 0; i < 500; ++i) {
            const double x = u(rng), y = u(rng);
            set.analogues.push_back({{x, y}, {1.0 + 0.5 * std::sin(3.0 * x) * std::cos(2.0 * y) + noise(rng), 0.0}, i, 0, 1});
        }
        for (std::size_t q = 0; q < n_queries; ++q) queries.push_back({u(rng), u(rng)});
    }
    if (set.empty() || queries.empty()) throw ValidationError("convergence scan needs analogues and queries");
    const KernelSpec kernel = cfg.real("sigma") > 0.0 ? KernelSpec{cfg.real("sigma")} : default_kernel(set);
    const auto schedule = cfg.counts("schedule");
    const auto d = convergence_scan(queries, set, kernel, schedule, cfg.count("samples"), cfg.seed());
    {
        auto out = open_output(cfg, "convergence.csv");
        write_convergence_csv(out, d);
    }
    {
        auto out = open_output(cfg, "kernel_probability.csv");
        write_probability_csv(out, d);
    }
    write_json(cfg, "convergence.json",
               {{"sigma", kernel.sigma},
                {"analogues", set.size()},
                {"queries", queries.size()},
                {"divergence_level", d.divergence_level},
                {"rare_sampled_fraction", d.rare_sampled_fraction},
                {"trend_rho", number(d.trend_rho)},
                {"trend_p_value", number(d.trend_p_value)}});
    log << "converge: " << d.rows.size() << " bootstrap levels\n";
}

}  // namespace ecx::cli
