#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "gramflow/errors.hpp"
#include "gramflow/runner.hpp"

int main(int argc, char** argv) {
    namespace runner = gramflow::runner;

    CLI::App app{"gram-matrix training dynamics: trainers, kernel reports, and bound checks"};
    app.set_version_flag("--version", runner::kArtifactVersion);

    std::string mode, config_path, out;
    std::uint64_t seed = 0;
    app.add_option("mode", mode,
                   "regression-gd | pinn-gd | pinn-ngd | gram-report | check-suite")
        ->required();
    app.add_option("--config", config_path, "path to a key = value config file")->required();
    auto* out_opt = app.add_option("--out", out, "output directory (overrides config)");
    auto* seed_opt = app.add_option("--seed", seed, "seed (overrides config)");
    CLI11_PARSE(app, argc, argv);

    runner::ConfigOverrides overrides;
    overrides.mode = mode;
    if (out_opt->count() > 0) overrides.out = out;
    if (seed_opt->count() > 0) overrides.seed = seed;

    runner::RunConfig cfg;
    try {
        cfg = runner::parse_config(config_path, overrides);
    } catch (const gramflow::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return runner::kExitInvalidConfig;
    }

    try {
        const runner::RunManifest manifest = runner::run(cfg);
        std::printf("%s: %s (exit %d, %.2fs) -> %s\n", cfg.mode.c_str(),
                    manifest.overall.c_str(), manifest.exit_code, manifest.duration_seconds,
                    cfg.out.c_str());
        return manifest.exit_code;
    } catch (const gramflow::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return runner::kExitInvalidConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return runner::kExitNumericalFailure;
    }
}
