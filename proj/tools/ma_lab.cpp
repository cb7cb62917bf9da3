// ma-lab: run, list and validate scenario files.
//   exit 0 success, 2 configuration error, 3 numerical failure, 1 other.

#include "malab/cli/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum Exit : int { ok = 0, other = 1, config = 2, numerical = 3 };

int guarded(const std::function<void()>& body) {
    using namespace malab;
    try {
        body();
        return Exit::ok;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return Exit::config;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return Exit::config;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return Exit::numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Exit::other;
    }
}

}  // namespace

int main(int argc, char** argv) {
    using namespace malab::cli;
    CLI::App app{"ma-lab: multiple-access numerical experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a scenario and write its result table");
    std::string run_config, out_path, format;
    std::uint64_t seed = 0;
    int threads = 1;
    run->add_option("config", run_config, "scenario file (JSON)")->required();
    auto* out_opt = run->add_option("--out", out_path, "output file (default: stdout)");
    auto* fmt_opt = run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    auto* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--threads", threads, "worker threads for grid points")->check(CLI::PositiveNumber);

    auto* list = app.add_subcommand("list", "list registered experiments");

    auto* validate = app.add_subcommand("validate", "check a scenario file without running it");
    std::string validate_config;
    validate->add_option("config", validate_config, "scenario file (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? Exit::ok : Exit::config;
    }

    if (list->parsed()) {
        for (const auto& e : registry()) std::cout << e.name << "  " << e.description << "\n";
        return Exit::ok;
    }
    if (validate->parsed()) {
        return guarded([&] {
            const auto cfg = load_config(validate_config);
            std::cout << "ok: " << cfg.experiment << " (config hash " << hex64(cfg.hash) << ")\n";
        });
    }
    return guarded([&] {
        const auto cfg = load_config(run_config);
        RunContext ctx{*seed_opt ? seed : cfg.seed, threads};
        const auto path = *out_opt ? out_path : cfg.output_path;
        const auto fmt = parse_format(*fmt_opt ? format : (cfg.output_format.empty() ? "csv" : cfg.output_format));
        const auto table = run_experiment(cfg, ctx);
        if (path.empty() || path == "-") std::cout << render(table, fmt);
        else emit(table, fmt, path);
    });
}
