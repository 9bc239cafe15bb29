#include "gramflow/trace.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace gramflow {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void append_field(std::string& out, double v) {
    out.push_back(',');
    if (!std::isnan(v)) out += format_double(v);
}

nlohmann::json optional_number(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

nlohmann::json record_to_json(const TraceRecord& r) {
    nlohmann::json j;
    j["iter"] = r.iter;
    j["loss"] = optional_number(r.loss);
    j["res_norm"] = optional_number(r.res_norm);
    j["step_ratio"] = optional_number(r.step_ratio);
    j["i1_norm"] = optional_number(r.i1_norm);
    j["lin_defect"] = optional_number(r.lin_defect);
    j["drift_max"] = optional_number(r.drift_max);
    j["lambda_min_h"] = optional_number(r.lambda_min_h);
    j["i2_rel_gap"] = optional_number(r.i2_rel_gap);
    return j;
}

nlohmann::json gram_to_json_value(const GramReport& g) {
    nlohmann::json j;
    j["dim"] = g.h_inf.rows();
    j["h_inf"] = g.h_inf.data();
    j["lambda0"] = g.lambda0;
    j["spectral_norm"] = g.spectral_norm;
    j["suggested_eta"] = g.suggested_eta;
    j["concentration_error"] = g.concentration_error;
    j["estimator_stderr"] = g.estimator_stderr;
    j["lambda0_unreliable"] = g.lambda0_unreliable;
    return j;
}

}  // namespace

std::string trace_to_csv(const TrainTrace& t) {
    const bool pinn = t.problem == "pinn";
    std::string out = pinn ? "iter,loss,res_norm,step_ratio,i1_norm,lin_defect,drift_max,lambda_min_h\n"
                           : "iter,loss,res_norm,step_ratio,i1_norm,drift_max,lambda_min_h\n";
    for (const TraceRecord& r : t.records) {
        out += std::to_string(r.iter);
        append_field(out, r.loss);
        append_field(out, r.res_norm);
        append_field(out, r.step_ratio);
        append_field(out, r.i1_norm);
        if (pinn) append_field(out, r.lin_defect);
        append_field(out, r.drift_max);
        append_field(out, r.lambda_min_h);
        out.push_back('\n');
    }
    return out;
}

std::string trace_to_json(const TrainTrace& t) {
    nlohmann::json j;
    j["problem"] = t.problem;
    j["optimizer"] = t.optimizer;
    j["activation"] = t.activation;
    j["eta"] = t.eta;
    j["n"] = t.n;
    j["m"] = t.m;
    j["initial_res_norm"] = t.initial_res_norm;
    j["diverged"] = t.diverged;
    j["hit_floor"] = t.hit_floor;
    j["ridge_fallbacks"] = t.ridge_fallbacks;
    j["records"] = nlohmann::json::array();
    for (const TraceRecord& r : t.records) j["records"].push_back(record_to_json(r));
    if (t.has_gram) j["gram"] = gram_to_json_value(t.gram);
    else j["gram"] = nullptr;
    return j.dump(2);
}

std::string gram_report_to_json(const GramReport& g) {
    return gram_to_json_value(g).dump(2);
}

}  // namespace gramflow
