#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "ecx/cli.hpp"
#include "ecx/error.hpp"
#include "ecx/parallel.hpp"

namespace ecx::cli {

namespace {

struct Command {
    const char* name;
    const char* help;
    void (*run)(const RunConfig&, std::ostream&);
};

constexpr Command kCommands[] = {
    {"metrics", "Fitness, Complexity, logPRODY, Herfindahl and RCA summaries per year", cmd_metrics},
    {"regularize", "Binary export matrices by thresholding or HMM regularization", cmd_regularize},
    {"analyze", "Plane fields, gradient fit, minima lines and nestedness reports", cmd_analyze},
    {"backtest", "Walk-forward CAGR% backtest of kernel forecasts and baselines", cmd_backtest},
    {"synth", "Synthetic panels and trajectories", cmd_synth},
    {"converge", "Bootstrap-to-kernel-regression convergence scan", cmd_converge},
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Economic complexity toolkit", "ecx"};
    app.require_subcommand(1);
    std::string config_path;
    int workers = 0;
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::App*> subs;
    std::map<std::string, std::map<std::string, CLI::Option*>> options;
    for (const auto& c : kCommands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", config_path, "flat key=value configuration file");
        sub->add_option("--workers", workers, "worker threads (0 = runtime default); does not change results")
            ->check(CLI::NonNegativeNumber);
        for (const auto& key : RunConfig::schema())
            options[c.name][key.name] = sub->add_option("--" + key.name, flags[key.name], key.help);
        subs[c.name] = sub;
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "ecx: " << e.what() << '\n';
        return 2;
    }

    const Command* command = nullptr;
    for (const auto& c : kCommands)
        if (subs[c.name]->parsed()) command = &c;
    if (!command) return 2;

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
        for (const auto& [name, option] : options[command->name])
            if (option->count() > 0) cfg.set(name, flags[name]);
        if (cfg.get("output").empty()) {
            const char* root = std::getenv(kOutputRootVariable);
            const std::filesystem::path base = root && *root ? root : "ecx-out";
            cfg.set("output", (base / command->name).string());
        }
        std::filesystem::create_directories(cfg.get("output"));
        cfg.save(std::filesystem::path(cfg.get("output")) / "config.txt");
        parallel::set_worker_count(workers);
        command->run(cfg, err);
        return 0;
    } catch (const InputError& e) {
        err << "ecx " << command->name << ": " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "ecx " << command->name << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "ecx " << command->name << ": " << e.what() << '\n';
        return 1;
    }
}

}  // namespace ecx::cli
