#include "gramflow/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gramflow/errors.hpp"
#include "gramflow/network.hpp"
#include "gramflow/parallel.hpp"
#include "gramflow/pinn.hpp"
#include "gramflow/regression.hpp"
#include "gramflow/rng.hpp"
#include "gramflow/theory.hpp"
#include "gramflow/trace.hpp"

namespace fs = std::filesystem;

namespace gramflow::runner {

namespace {

struct RawEntry {
    std::string value;
    int line = 0;
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail_key(const std::string& key, int line, const std::string& why) {
    std::ostringstream os;
    os << "config: key '" << key << "'";
    if (line > 0) os << " (line " << line << ")";
    os << ": " << why;
    throw ConfigError(os.str());
}

std::int64_t to_i64(const std::string& key, const RawEntry& e) {
    std::int64_t v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end) fail_key(key, e.line, "expected an integer, got '" + e.value + "'");
    return v;
}

std::uint64_t to_u64(const std::string& key, const RawEntry& e) {
    std::uint64_t v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end)
        fail_key(key, e.line, "expected a non-negative integer, got '" + e.value + "'");
    return v;
}

double to_double(const std::string& key, const RawEntry& e) {
    try {
        std::size_t used = 0;
        const double v = std::stod(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        fail_key(key, e.line, "expected a real number, got '" + e.value + "'");
    }
}

bool to_bool(const std::string& key, const RawEntry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    fail_key(key, e.line, "expected true or false, got '" + e.value + "'");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "mode",     "out",   "seed",     "d",         "n",         "n1",
        "n2",       "instance", "activation", "m",     "eta_mode",  "eta",
        "iters",    "n_mc",  "diag_gram", "diag_drift", "diag_recursion"};
    return keys;
}

bool is_train_mode(const std::string& mode) {
    return mode == "regression-gd" || mode == "pinn-gd" || mode == "pinn-ngd";
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const ConfigOverrides& overrides) {
    std::map<std::string, RawEntry> raw;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "config: line " << line_no << ": expected `key = value`, got '" << stripped << "'";
            throw ConfigError(os.str());
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) fail_key("(empty)", line_no, "missing key before '='");
        if (!known_keys().count(key)) fail_key(key, line_no, "unknown key");
        if (raw.count(key)) fail_key(key, line_no, "duplicate key");
        if (value.empty()) fail_key(key, line_no, "missing value");
        raw[key] = {value, line_no};
    }

    // command-line values take precedence over file keys
    if (overrides.mode) raw["mode"] = {*overrides.mode, 0};
    if (overrides.out) raw["out"] = {*overrides.out, 0};
    if (overrides.seed) raw["seed"] = {std::to_string(*overrides.seed), 0};

    auto require = [&](const char* key) -> const RawEntry& {
        auto it = raw.find(key);
        if (it == raw.end()) fail_key(key, 0, "required key is missing");
        return it->second;
    };

    RunConfig cfg;
    cfg.mode = require("mode").value;
    static const std::set<std::string> kModes = {"regression-gd", "pinn-gd", "pinn-ngd",
                                                 "gram-report", "check-suite"};
    if (!kModes.count(cfg.mode))
        fail_key("mode", raw["mode"].line,
                 "must be one of regression-gd, pinn-gd, pinn-ngd, gram-report, check-suite");

    // problem flavor: sample-count keys decide between the two problems
    bool regression_flavor;
    if (cfg.mode == "regression-gd") {
        regression_flavor = true;
    } else if (cfg.mode == "pinn-gd" || cfg.mode == "pinn-ngd") {
        regression_flavor = false;
    } else {
        const bool has_n = raw.count("n") > 0;
        const bool has_pde = raw.count("n1") > 0 || raw.count("n2") > 0;
        if (has_n == has_pde)
            fail_key("n", 0, "mode " + cfg.mode + " needs exactly one of `n` or `n1`/`n2`");
        regression_flavor = has_n;
    }

    // keys that apply to this mode and flavor
    std::set<std::string> allowed = {"mode", "out", "seed", "d"};
    auto allow = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys) allowed.insert(k);
    };
    if (regression_flavor)
        allow({"n", "activation"});
    else
        allow({"n1", "n2", "instance", "activation", "n_mc"});
    if (is_train_mode(cfg.mode))
        allow({"m", "eta_mode", "eta", "iters", "diag_gram", "diag_drift", "diag_recursion"});
    if (cfg.mode == "check-suite") allow({"m", "iters"});
    for (const auto& [key, entry] : raw)
        if (!allowed.count(key)) fail_key(key, entry.line, "does not apply to mode " + cfg.mode);

    cfg.out = require("out").value;
    cfg.seed = to_u64("seed", require("seed"));
    cfg.d = to_i64("d", require("d"));
    if (cfg.d < 1) fail_key("d", raw["d"].line, "must be at least 1");

    auto get_count = [&](const char* key, std::int64_t min_value) {
        const std::int64_t v = to_i64(key, require(key));
        if (v < min_value) fail_key(key, raw[key].line, "must be at least " + std::to_string(min_value));
        return v;
    };

    if (regression_flavor) {
        cfg.n = get_count("n", 1);
    } else {
        cfg.n1 = get_count("n1", 1);
        cfg.n2 = get_count("n2", 1);
        cfg.instance = raw.count("instance") ? raw["instance"].value : "poly-sine";
        if (*cfg.instance != "poly-sine" && *cfg.instance != "zero")
            fail_key("instance", raw["instance"].line, "must be poly-sine or zero");
        cfg.n_mc = raw.count("n_mc") ? to_i64("n_mc", raw["n_mc"]) : 50000;
        if (*cfg.n_mc < 100) fail_key("n_mc", raw["n_mc"].line, "must be at least 100");
    }

    cfg.activation = raw.count("activation") ? raw["activation"].value
                                             : (regression_flavor ? "relu" : "relu3");
    try {
        (void)network::activation_from_name(*cfg.activation);
    } catch (const ValidationError&) {
        fail_key("activation", raw["activation"].line, "must be relu, relu3, or tanh");
    }
    if (regression_flavor && *cfg.activation != "relu")
        fail_key("activation", raw.count("activation") ? raw["activation"].line : 0,
                 "the regression problem is defined for relu only");
    if (!regression_flavor && *cfg.activation == "relu")
        fail_key("activation", raw.count("activation") ? raw["activation"].line : 0,
                 "the PDE residual needs second derivatives; use relu3 or tanh");

    if (is_train_mode(cfg.mode) || cfg.mode == "check-suite") {
        cfg.m = get_count("m", 1);
        cfg.iters = raw.count("iters") ? to_i64("iters", raw["iters"])
                                       : (cfg.mode == "check-suite" ? 200 : 500);
        if (*cfg.iters < 1) fail_key("iters", raw["iters"].line, "must be at least 1");
    }
    if (cfg.mode == "check-suite") {
        if (*cfg.m < 64) fail_key("m", raw["m"].line, "check-suite needs m >= 64 for its width grid");
        if (*cfg.iters < 50)
            fail_key("iters", raw.count("iters") ? raw["iters"].line : 0,
                     "check-suite needs iters >= 50 for the rate gate");
    }

    if (is_train_mode(cfg.mode)) {
        cfg.eta_mode = raw.count("eta_mode") ? raw["eta_mode"].value : "auto";
        if (*cfg.eta_mode != "auto" && *cfg.eta_mode != "fixed")
            fail_key("eta_mode", raw["eta_mode"].line, "must be auto or fixed");
        if (*cfg.eta_mode == "fixed") {
            if (!raw.count("eta")) fail_key("eta", 0, "eta_mode = fixed requires `eta`");
            cfg.eta = to_double("eta", raw["eta"]);
            if (!(*cfg.eta > 0.0)) fail_key("eta", raw["eta"].line, "must be positive");
            if (cfg.mode == "pinn-ngd" && *cfg.eta > 1.0)
                fail_key("eta", raw["eta"].line, "natural-gradient step size must lie in (0, 1]");
        } else if (raw.count("eta")) {
            fail_key("eta", raw["eta"].line, "only valid with eta_mode = fixed");
        }
        cfg.diag_gram = raw.count("diag_gram") ? to_bool("diag_gram", raw["diag_gram"]) : false;
        cfg.diag_drift = raw.count("diag_drift") ? to_bool("diag_drift", raw["diag_drift"]) : true;
        cfg.diag_recursion =
            raw.count("diag_recursion") ? to_bool("diag_recursion", raw["diag_recursion"]) : true;
    }

    return cfg;
}

RunConfig parse_config(const std::string& path, const ConfigOverrides& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), overrides);
}

std::string resolved_config_text(const RunConfig& cfg) {
    std::ostringstream os;
    os << "mode = " << cfg.mode << "\n";
    os << "out = " << cfg.out << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "d = " << cfg.d << "\n";
    if (cfg.n) os << "n = " << *cfg.n << "\n";
    if (cfg.n1) os << "n1 = " << *cfg.n1 << "\n";
    if (cfg.n2) os << "n2 = " << *cfg.n2 << "\n";
    if (cfg.instance) os << "instance = " << *cfg.instance << "\n";
    if (cfg.activation) os << "activation = " << *cfg.activation << "\n";
    if (cfg.m) os << "m = " << *cfg.m << "\n";
    if (cfg.eta_mode) os << "eta_mode = " << *cfg.eta_mode << "\n";
    if (cfg.eta) os << "eta = " << format_double(*cfg.eta) << "\n";
    if (cfg.iters) os << "iters = " << *cfg.iters << "\n";
    if (cfg.n_mc) os << "n_mc = " << *cfg.n_mc << "\n";
    if (cfg.diag_gram) os << "diag_gram = " << (*cfg.diag_gram ? "true" : "false") << "\n";
    if (cfg.diag_drift) os << "diag_drift = " << (*cfg.diag_drift ? "true" : "false") << "\n";
    if (cfg.diag_recursion)
        os << "diag_recursion = " << (*cfg.diag_recursion ? "true" : "false") << "\n";
    return os.str();
}

namespace {

nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["mode"] = cfg.mode;
    j["out"] = cfg.out;
    j["seed"] = cfg.seed;
    j["d"] = cfg.d;
    if (cfg.n) j["n"] = *cfg.n;
    if (cfg.n1) j["n1"] = *cfg.n1;
    if (cfg.n2) j["n2"] = *cfg.n2;
    if (cfg.instance) j["instance"] = *cfg.instance;
    if (cfg.activation) j["activation"] = *cfg.activation;
    if (cfg.m) j["m"] = *cfg.m;
    if (cfg.eta_mode) j["eta_mode"] = *cfg.eta_mode;
    if (cfg.eta) j["eta"] = *cfg.eta;
    if (cfg.iters) j["iters"] = *cfg.iters;
    if (cfg.n_mc) j["n_mc"] = *cfg.n_mc;
    if (cfg.diag_gram) j["diag_gram"] = *cfg.diag_gram;
    if (cfg.diag_drift) j["diag_drift"] = *cfg.diag_drift;
    if (cfg.diag_recursion) j["diag_recursion"] = *cfg.diag_recursion;
    return j;
}

// accumulates artifacts and the roll-up while a mode pipeline executes
struct RunContext {
    fs::path root;
    RunManifest manifest;
    nlohmann::json rollup_checks = nlohmann::json::array();
    bool any_gated_failure = false;

    void write_file(const std::string& rel, const std::string& text) {
        const fs::path p = root / rel;
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        if (!out) throw ConfigError("run: cannot write '" + p.string() + "'");
        out << text;
        manifest.outputs.push_back(rel);
    }

    void add_check(const theory::CheckReport& rep) {
        write_file("checks/" + rep.check_name + ".json", rep.to_json() + "\n");
        nlohmann::json row;
        row["check_name"] = rep.check_name;
        row["verdict"] = theory::verdict_name(rep.verdict);
        row["measured"] = std::isnan(rep.measured) ? nlohmann::json() : nlohmann::json(rep.measured);
        row["bound"] = std::isnan(rep.bound) ? nlohmann::json() : nlohmann::json(rep.bound);
        row["margin"] = std::isnan(rep.margin) ? nlohmann::json() : nlohmann::json(rep.margin);
        rollup_checks.push_back(row);
        if (rep.verdict == theory::Verdict::Fail) any_gated_failure = true;
    }

    void write_trace(const TrainTrace& trace) {
        write_file("trace.csv", trace_to_csv(trace));
        write_file("trace.json", trace_to_json(trace) + "\n");
        write_file("gram.json", gram_report_to_json(trace.gram) + "\n");
    }
};

DiagnosticsFlags diagnostics_from(const RunConfig& cfg) {
    DiagnosticsFlags flags;
    flags.gram = cfg.diag_gram.value_or(false);
    flags.drift = cfg.diag_drift.value_or(true);
    flags.recursion = cfg.diag_recursion.value_or(true);
    return flags;
}

void run_regression_gd(const RunConfig& cfg, RunContext& ctx) {
    const regression::RegressionDataset data =
        regression::sample_dataset(*cfg.n, cfg.d, cfg.seed);
    ctx.write_file("dataset.json", regression::dataset_to_json(data) + "\n");

    const network::ModelParams params0 =
        network::init_params(*cfg.m, cfg.d + 1, network::ActivationKind::Relu, cfg.seed);
    regression::GdOptions opt;
    opt.iters = *cfg.iters;
    opt.eta_auto = (*cfg.eta_mode == "auto");
    opt.eta = cfg.eta.value_or(0.0);
    opt.diagnostics = diagnostics_from(cfg);
    const TrainTrace trace = regression::train_gd(params0, data, opt);
    ctx.write_trace(trace);
    ctx.manifest.resolved["eta"] = trace.eta;

    if (trace.diverged) throw NumericalError("training diverged (loss exceeded 1e6 x initial)");
    if (static_cast<std::int64_t>(trace.records.size()) >= 51)
        ctx.add_check(theory::check_gd_convergence(trace, trace.gram));
    if (opt.diagnostics.drift) ctx.add_check(theory::check_weight_drift(trace, trace.gram));
    if (opt.diagnostics.recursion) ctx.add_check(theory::check_recursion_identity(trace));
}

void run_pinn_train(const RunConfig& cfg, RunContext& ctx) {
    const pinn::PdeInstance inst = pinn::make_instance(*cfg.instance, cfg.d);
    const pinn::PinnDataset data = pinn::sample_dataset(inst, *cfg.n1, *cfg.n2, cfg.seed);
    ctx.write_file("dataset.json", pinn::dataset_to_json(data) + "\n");

    const network::ActivationKind act = network::activation_from_name(*cfg.activation);
    const network::ModelParams params0 = network::init_params(*cfg.m, cfg.d + 2, act, cfg.seed);
    pinn::PinnTrainOptions opt;
    opt.optimizer = (cfg.mode == "pinn-ngd") ? pinn::Optimizer::Ngd : pinn::Optimizer::Gd;
    opt.iters = *cfg.iters;
    opt.eta_auto = (*cfg.eta_mode == "auto");
    opt.eta = cfg.eta.value_or(0.0);
    opt.diagnostics = diagnostics_from(cfg);
    opt.n_mc = *cfg.n_mc;
    opt.mc_seed = cfg.seed;
    const TrainTrace trace = pinn::train(params0, data, opt);
    ctx.write_trace(trace);
    ctx.manifest.resolved["eta"] = trace.eta;
    ctx.manifest.resolved["n_mc"] = *cfg.n_mc;
    ctx.manifest.resolved["ridge_fallbacks"] = trace.ridge_fallbacks;

    if (trace.diverged) throw NumericalError("training diverged (loss exceeded 1e6 x initial)");
    if (opt.optimizer == pinn::Optimizer::Gd) {
        if (static_cast<std::int64_t>(trace.records.size()) >= 51)
            ctx.add_check(theory::check_gd_convergence(trace, trace.gram));
        if (opt.diagnostics.recursion) ctx.add_check(theory::check_recursion_identity(trace));
    } else {
        if (trace.eta < 1.0) {
            ctx.add_check(theory::check_ngd_linear(trace, trace.eta));
        } else if (trace.activation == "tanh") {
            ctx.add_check(theory::check_ngd_quadratic(trace));
        }
    }
}

void run_gram_report(const RunConfig& cfg, RunContext& ctx) {
    GramReport report;
    if (cfg.n) {
        const regression::RegressionDataset data =
            regression::sample_dataset(*cfg.n, cfg.d, cfg.seed);
        ctx.write_file("dataset.json", regression::dataset_to_json(data) + "\n");
        report = regression::gram_inf_relu(data);
    } else {
        const pinn::PdeInstance inst = pinn::make_instance(*cfg.instance, cfg.d);
        const pinn::PinnDataset data = pinn::sample_dataset(inst, *cfg.n1, *cfg.n2, cfg.seed);
        ctx.write_file("dataset.json", pinn::dataset_to_json(data) + "\n");
        report = pinn::gram_inf_mc(data, network::activation_from_name(*cfg.activation),
                                   *cfg.n_mc, cfg.seed);
        ctx.manifest.resolved["n_mc"] = *cfg.n_mc;
    }
    ctx.write_file("gram.json", gram_report_to_json(report) + "\n");
    ctx.manifest.resolved["suggested_eta"] = report.suggested_eta;
    ctx.manifest.resolved["lambda0"] = report.lambda0;
}

void run_check_suite_regression(const RunConfig& cfg, RunContext& ctx) {
    CounterRng master(cfg.seed, streams::kCheckTrial);
    const regression::RegressionDataset data =
        regression::sample_dataset(*cfg.n, cfg.d, cfg.seed);
    ctx.write_file("dataset.json", regression::dataset_to_json(data) + "\n");

    const std::vector<std::int64_t> m_grid = {*cfg.m / 8, *cfg.m / 4, *cfg.m / 2, *cfg.m};
    ctx.add_check(theory::check_gram_concentration(data, m_grid, 5, master.next_u64()));

    const network::ModelParams probe =
        network::init_params(*cfg.m, cfg.d + 1, network::ActivationKind::Relu, master.next_u64());
    ctx.add_check(theory::check_gram_stability(probe, data, {0.01, 0.05}, 5, master.next_u64()));

    ctx.add_check(theory::check_initial_scale_regression({16, 64, 256}, cfg.d, *cfg.m, 5,
                                                         master.next_u64()));

    const network::ModelParams params0 =
        network::init_params(*cfg.m, cfg.d + 1, network::ActivationKind::Relu, cfg.seed);
    regression::GdOptions opt;
    opt.iters = *cfg.iters;
    opt.diagnostics.gram = true;
    const TrainTrace trace = regression::train_gd(params0, data, opt);
    ctx.write_trace(trace);
    ctx.manifest.resolved["eta"] = trace.eta;
    if (trace.diverged) throw NumericalError("suite training run diverged");
    ctx.add_check(theory::check_gd_convergence(trace, trace.gram));
    ctx.add_check(theory::check_weight_drift(trace, trace.gram));
    ctx.add_check(theory::check_recursion_identity(trace));
}

void run_check_suite_pinn(const RunConfig& cfg, RunContext& ctx) {
    CounterRng master(cfg.seed, streams::kCheckTrial);
    const pinn::PdeInstance inst = pinn::make_instance(*cfg.instance, cfg.d);
    const pinn::PinnDataset data = pinn::sample_dataset(inst, *cfg.n1, *cfg.n2, cfg.seed);
    ctx.write_file("dataset.json", pinn::dataset_to_json(data) + "\n");
    const network::ActivationKind act = network::activation_from_name(*cfg.activation);

    const std::vector<std::int64_t> m_grid = {*cfg.m / 8, *cfg.m / 4, *cfg.m / 2, *cfg.m};
    ctx.add_check(
        theory::check_gram_concentration(data, act, m_grid, 3, *cfg.n_mc, master.next_u64()));

    const network::ModelParams probe = network::init_params(*cfg.m, cfg.d + 2, act, master.next_u64());
    const std::vector<double> r_grid = {0.02, 0.05, 0.1, 0.2};
    ctx.add_check(theory::check_gram_stability(probe, data, r_grid, 5, master.next_u64()));
    ctx.add_check(theory::check_jacobian_stability(probe, data, r_grid, 5, master.next_u64(), {}));

    ctx.add_check(
        theory::check_initial_scale_pinn({1, 2, 3}, *cfg.n1, *cfg.n2, *cfg.m, 5, master.next_u64()));

    // gradient-descent run feeds the rate, drift-sweep, and recursion gates
    pinn::PinnTrainOptions gd_opt;
    gd_opt.iters = *cfg.iters;
    gd_opt.n_mc = *cfg.n_mc;
    gd_opt.mc_seed = cfg.seed;
    std::vector<TrainTrace> sweep;
    for (std::int64_t width : {*cfg.m / 4, *cfg.m / 2, *cfg.m}) {
        const network::ModelParams p = network::init_params(width, cfg.d + 2, act, cfg.seed);
        sweep.push_back(pinn::train(p, data, gd_opt));
        if (sweep.back().diverged) throw NumericalError("suite training run diverged");
    }
    const TrainTrace& trace = sweep.back();
    ctx.write_trace(trace);
    ctx.manifest.resolved["eta"] = trace.eta;
    ctx.manifest.resolved["n_mc"] = *cfg.n_mc;
    ctx.add_check(theory::check_gd_convergence(trace, trace.gram));
    ctx.add_check(theory::check_recursion_identity(trace));
    ctx.add_check(theory::check_weight_drift_sweep(sweep));

    // natural-gradient linear rate, and the quadratic regime when smooth
    pinn::PinnTrainOptions ngd_opt;
    ngd_opt.optimizer = pinn::Optimizer::Ngd;
    ngd_opt.iters = std::min<std::int64_t>(*cfg.iters, 80);
    ngd_opt.eta_auto = false;
    ngd_opt.eta = 0.5;
    ngd_opt.n_mc = *cfg.n_mc;
    ngd_opt.mc_seed = cfg.seed;
    const network::ModelParams ngd_params = network::init_params(*cfg.m, cfg.d + 2, act, cfg.seed);
    const TrainTrace ngd_trace = pinn::train(ngd_params, data, ngd_opt);
    if (ngd_trace.diverged) throw NumericalError("suite natural-gradient run diverged");
    ctx.add_check(theory::check_ngd_linear(ngd_trace, 0.5));

    if (act == network::ActivationKind::SmoothTanh) {
        pinn::PinnTrainOptions quad_opt = ngd_opt;
        quad_opt.iters = std::min<std::int64_t>(*cfg.iters, 40);
        quad_opt.eta = 1.0;
        const TrainTrace quad_trace = pinn::train(ngd_params, data, quad_opt);
        if (quad_trace.diverged) throw NumericalError("suite natural-gradient run diverged");
        ctx.add_check(theory::check_ngd_quadratic(quad_trace));
    }
}

}  // namespace

std::string manifest_to_json(const RunManifest& man) {
    nlohmann::json j;
    j["artifact_version"] = man.artifact_version;
    j["mode"] = man.config.mode;
    j["resolved_config"] = config_to_json(man.config);
    j["resolved"] = man.resolved;
    j["seed"] = man.seed;
    j["duration_seconds"] = man.duration_seconds;
    j["exit_code"] = man.exit_code;
    j["overall"] = man.overall;
    j["outputs"] = man.outputs;
    return j.dump(2);
}

RunManifest run(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    RunContext ctx;
    ctx.root = fs::path(cfg.out);
    fs::create_directories(ctx.root);
    ctx.manifest.config = cfg;
    ctx.manifest.artifact_version = kArtifactVersion;
    ctx.manifest.seed = cfg.seed;
    ctx.manifest.resolved["threads"] = thread_count();

    ctx.write_file("resolved.cfg", resolved_config_text(cfg));

    bool numerical_failure = false;
    std::string error_note;
    try {
        if (cfg.mode == "regression-gd") {
            run_regression_gd(cfg, ctx);
        } else if (cfg.mode == "pinn-gd" || cfg.mode == "pinn-ngd") {
            run_pinn_train(cfg, ctx);
        } else if (cfg.mode == "gram-report") {
            run_gram_report(cfg, ctx);
        } else if (cfg.mode == "check-suite") {
            if (cfg.n)
                run_check_suite_regression(cfg, ctx);
            else
                run_check_suite_pinn(cfg, ctx);
        } else {
            throw ConfigError("run: unknown mode '" + cfg.mode + "'");
        }
    } catch (const NumericalError& e) {
        numerical_failure = true;
        error_note = e.what();
    } catch (const ValidationError& e) {
        // post-validation failures are data degeneracies, not config mistakes
        numerical_failure = true;
        error_note = e.what();
    }

    if (numerical_failure) {
        ctx.manifest.exit_code = kExitNumericalFailure;
        ctx.manifest.overall = "numerical-failure";
        ctx.write_file("error.txt", error_note + "\n");
    } else if (ctx.any_gated_failure) {
        ctx.manifest.exit_code = kExitCheckFailure;
        ctx.manifest.overall = "check-failure";
    } else {
        ctx.manifest.exit_code = kExitPass;
        ctx.manifest.overall = "pass";
    }

    nlohmann::json report;
    report["overall"] = ctx.manifest.overall;
    report["exit_code"] = ctx.manifest.exit_code;
    report["checks"] = ctx.rollup_checks;
    report["resolved_config"] = config_to_json(cfg);
    if (!error_note.empty()) report["error"] = error_note;
    ctx.write_file("report.json", report.dump(2) + "\n");

    ctx.manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ctx.manifest.outputs.push_back("manifest.json");
    const fs::path tmp = ctx.root / "manifest.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ConfigError("run: cannot write '" + tmp.string() + "'");
        out << manifest_to_json(ctx.manifest) << "\n";
    }
    fs::rename(tmp, ctx.root / "manifest.json");
    return ctx.manifest;
}

}  // namespace gramflow::runner
