#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace gramflow::runner {

inline constexpr const char* kArtifactVersion = "0.1.0";

// process exit codes shared by run() and the command-line tool
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailure = 2;
inline constexpr int kExitInvalidConfig = 3;
inline constexpr int kExitNumericalFailure = 4;

// Fully resolved experiment description. Fields that do not apply to the
// chosen mode stay disengaged; applicable fields are filled with defaults
// during parsing, so two configs compare equal iff they run identically.
struct RunConfig {
    std::string mode;  // regression-gd | pinn-gd | pinn-ngd | gram-report | check-suite
    std::string out;   // output directory
    std::uint64_t seed = 0;
    std::int64_t d = 0;

    std::optional<std::int64_t> n;        // regression sample count
    std::optional<std::int64_t> n1, n2;   // pde interior / boundary counts
    std::optional<std::string> instance;  // pde instance name
    std::optional<std::string> activation;
    std::optional<std::int64_t> m;
    std::optional<std::string> eta_mode;  // "auto" | "fixed"
    std::optional<double> eta;            // engaged iff eta_mode == "fixed"
    std::optional<std::int64_t> iters;
    std::optional<std::int64_t> n_mc;
    std::optional<bool> diag_gram, diag_drift, diag_recursion;

    bool operator==(const RunConfig&) const = default;
};

// command-line values that take precedence over config-file keys
struct ConfigOverrides {
    std::optional<std::string> mode;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
};

// Parse a flat `key = value` document ('#' comments, blank lines ignored).
// Raises ConfigError naming the offending key and line for unknown keys,
// malformed values, keys that do not apply to the mode, and missing
// required keys. Overrides are applied before validation.
RunConfig parse_config_text(const std::string& text, const ConfigOverrides& overrides = {});
RunConfig parse_config(const std::string& path, const ConfigOverrides& overrides = {});

// canonical key = value form of a resolved config; re-parsing it yields
// an equal RunConfig
std::string resolved_config_text(const RunConfig& config);

struct RunManifest {
    RunConfig config;
    std::string artifact_version;
    double duration_seconds = 0.0;
    std::vector<std::string> outputs;  // paths relative to config.out
    std::uint64_t seed = 0;
    int exit_code = kExitPass;
    std::string overall;       // pass | check-failure | numerical-failure
    nlohmann::json resolved;   // audited auto choices (eta, n_mc, threads)
};

std::string manifest_to_json(const RunManifest& manifest);

// Execute the configured mode, writing every artifact (resolved config,
// dataset, gram report, trace CSV/JSON, per-check JSON, roll-up, manifest)
// under config.out. Numerical failures (divergence, degenerate data, rank
// deficiency) are caught, recorded, and reflected in exit_code with the
// partial outputs preserved; the manifest itself is written atomically.
RunManifest run(const RunConfig& config);

}  // namespace gramflow::runner
