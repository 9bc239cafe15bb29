#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gramflow/matrix.hpp"

namespace gramflow {

inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

// Limiting-kernel summary shared by the regression and PDE trainers.
// estimator_stderr is 0 when the kernel came from the closed form; for
// the Monte Carlo estimator it is the block-jackknife standard error of
// lambda0 and lambda0_unreliable flags estimates within 3 stderr of 0.
struct GramReport {
    numerics::DenseMatrix h_inf;
    double lambda0 = 0.0;
    double spectral_norm = 0.0;
    double suggested_eta = 0.0;       // 0.5 / ||H_inf||_2
    double concentration_error = 0.0; // ||H(0) - H_inf||_F once parameters exist
    double estimator_stderr = 0.0;
    bool lambda0_unreliable = false;
};

// Per-iteration diagnostics. NaN means "not measured here"; the CSV
// writer renders those as empty fields.
struct TraceRecord {
    std::int64_t iter = 0;
    double loss = kUnset;
    double res_norm = kUnset;      // ||residual||_2 entering this iteration
    double step_ratio = kUnset;    // loss(k) / loss(k-1), empty at k = 0
    double i1_norm = kUnset;       // Taylor-remainder norm of the step leaving k
    double lin_defect = kUnset;    // ||J dw + eta * residual|| (natural-gradient steps)
    double drift_max = kUnset;     // max_r ||w_r(k) - w_r(0)||_2
    double lambda_min_h = kUnset;  // smallest eigenvalue of the instantaneous Gram
    double i2_rel_gap = kUnset;    // relative gap between the two linear-term routes
};

// What the trainers measure beyond the loss curve. Gram diagnostics
// rebuild the kernel every iteration (quadratic in the sample count,
// linear in width) so they default off; the cheap remainder and drift
// probes stay on.
struct DiagnosticsFlags {
    bool recursion = true;  // i1_norm via the Jacobian route
    bool drift = true;      // drift_max
    bool gram = false;      // lambda_min_h plus the dual-route linear-term gap
};

struct TrainTrace {
    std::string problem;    // "regression" or "pinn"
    std::string optimizer;  // "gd" or "ngd"
    std::string activation;
    double eta = 0.0;
    std::int64_t n = 0;       // number of residual entries
    std::int64_t m = 0;       // network width
    double initial_res_norm = 0.0;
    bool diverged = false;    // loss exceeded 1e6 x initial (or went non-finite)
    bool hit_floor = false;   // natural-gradient numerical floor (loss < 1e-24)
    std::int64_t ridge_fallbacks = 0;  // natural-gradient solves that needed the rescue ridge
    std::vector<TraceRecord> records;
    GramReport gram;
    bool has_gram = false;
};

// CSV with pinned headers and 17-significant-digit values:
//   regression: iter,loss,res_norm,step_ratio,i1_norm,drift_max,lambda_min_h
//   pinn:       iter,loss,res_norm,step_ratio,i1_norm,lin_defect,drift_max,lambda_min_h
std::string trace_to_csv(const TrainTrace& t);

// full JSON document embedding the records and the Gram report
std::string trace_to_json(const TrainTrace& t);

std::string gram_report_to_json(const GramReport& g);

// shortest round-trip decimal rendering used by every CSV/JSON writer
std::string format_double(double v);

}  // namespace gramflow
