#include "hybrid_id/cli.hpp"

#include "hybrid_id/config.hpp"
#include "hybrid_id/errors.hpp"
#include "hybrid_id/io.hpp"
#include "hybrid_id/strategy.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace hybrid_id {

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kSolver = 3 };

struct Invocation {
    std::string config_path;
    std::string out_override;
};

RunConfiguration prepare(const Invocation& inv) {
    auto cfg = load_config(inv.config_path);
    if (!inv.out_override.empty()) {
        cfg.output_dir = inv.out_override;
    }
    fs::create_directories(cfg.output_dir);
    return cfg;
}

void cmd_scan(const Invocation& inv) {
    const auto cfg = prepare(inv);
    const auto objective = cfg.objective();
    const auto cloud = uniform_scan(objective, cfg.space, cfg.strategy.scan);
    const auto classes = classify_all(cloud, cfg.strategy.topology);
    const auto reduced = reduce_domain(cfg.space, classes, cloud, cfg.strategy.topology);
    write_scatter(cloud, cfg.output_dir);
    write_classification(cloud, classes, cfg.output_dir / "classification.csv");
    write_reduced_bounds(cfg.space, reduced, cfg.output_dir / "reduced_bounds.csv");
    std::cout << "scan: " << cloud.points.size() << " points, " << cloud.retained.size() << " retained\n";
    for (const auto& c : classes) {
        std::cout << "  " << cfg.space.names()[c.parameter] << ": " << to_string(c.label) << '\n';
    }
}

void cmd_identify(const Invocation& inv) {
    const auto cfg = prepare(inv);
    const auto objective = cfg.objective();
    const auto result = run_hybrid(objective, cfg.space, cfg.ga, cfg.lm);
    write_solution(cfg.space.names(), result.theta, result.cost, cfg.output_dir / "solution.csv");
    write_ga_trace(cfg.space.names(), result.ga.trace, cfg.output_dir / "ga_trace.csv");
    write_lm_trace(result.lm, cfg.output_dir / "lm_trace.csv");
    std::cout << "identify: objective " << format_double(result.cost) << " (lm stop: " << to_string(result.lm.stop)
              << ")\n";
    for (std::size_t i = 0; i < cfg.space.count(); ++i) {
        std::cout << "  " << cfg.space.names()[i] << " = " << format_double(result.theta[static_cast<Eigen::Index>(i)])
                  << '\n';
    }
}

void cmd_ensemble(const Invocation& inv) {
    const auto cfg = prepare(inv);
    const auto objective = cfg.objective();
    const auto report = ensemble_analyze(objective, cfg.space, cfg.strategy.ensemble);
    write_ensemble_table(cfg.space.names(), report, cfg.output_dir / "ensemble.csv");
    write_verdict(report, false, cfg.output_dir / "verdict.txt");
    std::cout << "ensemble: " << to_string(report.verdict) << ", response dispersion "
              << format_double(report.response_dispersion) << '\n';
}

void cmd_pipeline(const Invocation& inv) {
    const auto cfg = prepare(inv);
    const auto objective = cfg.objective();
    const auto result = strategy_loop(objective, cfg.space, cfg.strategy);
    write_scatter(result.cloud, cfg.output_dir);
    write_classification(result.cloud, result.classes, cfg.output_dir / "classification.csv");
    write_reduced_bounds(cfg.space, result.reduced_space, cfg.output_dir / "reduced_bounds.csv");
    for (std::size_t k = 0; k < result.history.size(); ++k) {
        write_ensemble_table(cfg.space.names(), result.history[k],
                             cfg.output_dir / ("ensemble_" + std::to_string(k) + ".csv"));
    }
    write_ensemble_table(cfg.space.names(), result.final_report(), cfg.output_dir / "ensemble.csv");
    write_verdict(result.final_report(), result.inconclusive, cfg.output_dir / "verdict.txt");
    write_strategy_history(result, cfg.output_dir / "strategy_history.csv");
    std::cout << "pipeline: " << to_string(result.final_report().verdict) << " after " << result.history.size()
              << " ensemble(s)" << (result.inconclusive ? " [inconclusive]" : "") << '\n';
}

void cmd_synth(const Invocation& inv) {
    const auto cfg = prepare(inv);
    if (!cfg.synthetic) {
        throw ConfigError("synth: config has no data.synthetic section");
    }
    const auto data = generate_synthetic(*cfg.full_model, cfg.truth_vector(), cfg.tests, cfg.synthetic->noise_std,
                                         cfg.synthetic->seed);
    const auto manifest = write_dataset(data, cfg.output_dir);
    std::cout << "synth: wrote " << manifest.string() << '\n';
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Parameter identification with a hybrid genetic algorithm / Levenberg-Marquardt strategy",
                 "hybrid-id"};
    app.require_subcommand(1);

    Invocation inv;
    std::function<void(const Invocation&)> action;
    auto add = [&](const char* name, const char* help, void (*fn)(const Invocation&)) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("config", inv.config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--out", inv.out_override, "Override the configured output directory");
        sub->callback([&action, fn] { action = fn; });
    };
    add("scan", "Uniform scan, distribution classification and domain reduction", cmd_scan);
    add("identify", "One hybrid GA + LM identification run", cmd_identify);
    add("ensemble", "Repeated hybrid runs with dispersion analysis", cmd_ensemble);
    add("pipeline", "Full strategy: scan, reduce, ensembles with refinement", cmd_pipeline);
    add("synth", "Write a synthetic dataset and manifest", cmd_synth);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        action(inv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.kind()) {
        case ErrorKind::Config: return kUsage;
        case ErrorKind::Data: return kData;
        case ErrorKind::Solver: return kSolver;
        }
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSolver;
    }
    return kOk;
}

} // namespace hybrid_id
