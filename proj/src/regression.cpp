#include "gramflow/regression.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

#include "gramflow/errors.hpp"
#include "gramflow/numerics.hpp"
#include "gramflow/rng.hpp"

namespace gramflow::regression {

namespace {

constexpr double kParallelTol = 1e-12;   // |cos| this close to 1 counts as parallel
constexpr double kDivergenceFactor = 1e6;
constexpr int kMaxSampleAttempts = 100;
constexpr double kPi = 3.14159265358979323846;

double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double point_dot(const AugmentedPoint& a, const AugmentedPoint& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.coords.size(); ++k) s += a.coords[k] * b.coords[k];
    return s;
}

void require_relu(const ModelParams& params, const char* who) {
    if (params.activation != network::ActivationKind::Relu)
        throw ValidationError(std::string(who) + ": regression kernels are defined for relu only");
}

// n x (m * d_aug) matrix whose row i is the first-layer gradient of the
// prediction at point i
DenseMatrix grad_matrix(const ModelParams& params, const RegressionDataset& data) {
    const std::size_t n = data.size();
    DenseMatrix g(n, static_cast<std::size_t>(params.m * params.d_aug));
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> row = network::output_grad(params, data.points[i]);
        std::copy(row.begin(), row.end(), g.row_ptr(i));
    }
    return g;
}

}  // namespace

void validate_dataset(const RegressionDataset& data) {
    if (data.points.empty()) throw ValidationError("regression dataset is empty");
    if (data.points.size() != data.targets.size())
        throw ValidationError("regression dataset: point/target count mismatch");
    const std::size_t d_aug = data.points.front().coords.size();
    for (const AugmentedPoint& p : data.points) {
        network::validate_augmented(p);
        if (p.coords.size() != d_aug)
            throw ValidationError("regression dataset: inconsistent point dimensions");
    }
    for (double y : data.targets)
        if (!std::isfinite(y) || std::abs(y) > 1.0)
            throw ValidationError("regression dataset: targets must lie in [-1, 1]");
    for (std::size_t i = 0; i < data.points.size(); ++i) {
        const double ni = std::sqrt(point_dot(data.points[i], data.points[i]));
        for (std::size_t j = i + 1; j < data.points.size(); ++j) {
            const double nj = std::sqrt(point_dot(data.points[j], data.points[j]));
            const double cosine = point_dot(data.points[i], data.points[j]) / (ni * nj);
            if (std::abs(cosine) >= 1.0 - kParallelTol)
                throw ValidationError("regression dataset: points " + std::to_string(i) + " and " +
                                      std::to_string(j) + " are parallel");
        }
    }
}

RegressionDataset sample_dataset(std::int64_t n, std::int64_t d, std::uint64_t seed) {
    if (n < 2) throw ValidationError("sample_dataset: need at least 2 points");
    if (d < 1) throw ValidationError("sample_dataset: dimension must be positive");

    for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
        const std::uint64_t salt = static_cast<std::uint64_t>(attempt) << 16;
        CounterRng point_rng(seed, streams::kRegressionPoints | salt);
        CounterRng target_rng(seed, streams::kRegressionTargets | salt);

        RegressionDataset data;
        data.points.reserve(static_cast<std::size_t>(n));
        data.targets.reserve(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) {
            // uniform in the unit ball: gaussian direction, radius u^(1/d)
            std::vector<double> x(static_cast<std::size_t>(d));
            double nrm = 0.0;
            do {
                for (double& c : x) c = point_rng.normal();
                nrm = vec_norm(x);
            } while (nrm == 0.0);
            const double radius =
                std::pow(point_rng.uniform01(), 1.0 / static_cast<double>(d)) / nrm;
            AugmentedPoint p;
            p.coords.resize(static_cast<std::size_t>(d) + 1);
            for (std::int64_t k = 0; k < d; ++k)
                p.coords[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)] * radius;
            p.coords.back() = 1.0;
            data.points.push_back(std::move(p));
            data.targets.push_back(2.0 * target_rng.uniform01() - 1.0);
        }
        try {
            validate_dataset(data);
            return data;
        } catch (const ValidationError&) {
            continue;  // parallel pair; redraw from the next substream
        }
    }
    throw ValidationError("sample_dataset: no valid dataset after 100 attempts");
}

std::vector<double> predict(const ModelParams& params, const RegressionDataset& data) {
    std::vector<double> u(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) u[i] = network::forward(params, data.points[i]);
    return u;
}

double regression_loss(const ModelParams& params, const RegressionDataset& data) {
    if (data.points.size() != data.targets.size())
        throw ValidationError("regression_loss: point/target count mismatch");
    const std::vector<double> u = predict(params, data);
    double loss = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double diff = u[i] - data.targets[i];
        loss += 0.5 * diff * diff;
    }
    return loss;
}

DenseMatrix gram_finite(const ModelParams& params, const RegressionDataset& data) {
    network::validate_params(params);
    require_relu(params, "gram_finite");
    const std::size_t n = data.size();
    if (n == 0) throw ValidationError("gram_finite: empty dataset");

    // count co-active neurons per pair, then scale by the input inner products
    DenseMatrix counts(n, n);
    std::vector<char> active(n);
    for (std::int64_t r = 0; r < params.m; ++r) {
        const double* w = params.weights.row_ptr(static_cast<std::size_t>(r));
        for (std::size_t i = 0; i < n; ++i)
            active[i] = network::dot(data.points[i], w) >= 0.0 ? 1 : 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i; j < n; ++j)
                if (active[j]) counts(i, j) += 1.0;
        }
    }
    DenseMatrix h(n, n);
    const double inv_m = 1.0 / static_cast<double>(params.m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = point_dot(data.points[i], data.points[j]) * counts(i, j) * inv_m;
            h(i, j) = v;
            h(j, i) = v;
        }
    return h;
}

GramReport gram_inf_relu(const RegressionDataset& data) {
    validate_dataset(data);
    const std::size_t n = data.size();
    GramReport report;
    report.h_inf = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double ip = point_dot(data.points[i], data.points[j]);
            // the diagonal angle is exactly zero; acos of the rounded
            // cosine would smear it to ~1e-8
            double theta = 0.0;
            if (i != j) {
                const double ni = std::sqrt(point_dot(data.points[i], data.points[i]));
                const double nj = std::sqrt(point_dot(data.points[j], data.points[j]));
                theta = std::acos(std::max(-1.0, std::min(1.0, ip / (ni * nj))));
            }
            const double v = ip * (kPi - theta) / (2.0 * kPi);
            report.h_inf(i, j) = v;
            report.h_inf(j, i) = v;
        }
    }
    const numerics::SpectrumSummary s = numerics::sym_eig_extremes(report.h_inf);
    if (!(s.lambda_min > 0.0))
        throw NumericalError("gram_inf_relu: limiting kernel is not positive definite (lambda_min = " +
                             format_double(s.lambda_min) + ")");
    report.lambda0 = s.lambda_min;
    report.spectral_norm = s.spectral_norm;
    report.suggested_eta = 0.5 / s.spectral_norm;
    return report;
}

ModelParams gd_step(const ModelParams& params, const RegressionDataset& data, double eta) {
    network::validate_params(params);
    require_relu(params, "gd_step");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("gd_step: eta must be positive");
    if (data.points.size() != data.targets.size())
        throw ValidationError("gd_step: point/target count mismatch");

    const std::vector<double> u = predict(params, data);
    std::vector<double> err(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) err[i] = u[i] - data.targets[i];

    ModelParams next = params;
    const double scale = 1.0 / std::sqrt(static_cast<double>(params.m));
    const std::size_t d_aug = static_cast<std::size_t>(params.d_aug);
    std::vector<double> acc(d_aug);
    for (std::int64_t r = 0; r < params.m; ++r) {
        const double* w = params.weights.row_ptr(static_cast<std::size_t>(r));
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (network::dot(data.points[i], w) < 0.0) continue;
            const double c = err[i];
            for (std::size_t k = 0; k < d_aug; ++k) acc[k] += c * data.points[i].coords[k];
        }
        const double coef = eta * params.signs[static_cast<std::size_t>(r)] * scale;
        double* w_next = next.weights.row_ptr(static_cast<std::size_t>(r));
        for (std::size_t k = 0; k < d_aug; ++k) w_next[k] = w[k] - coef * acc[k];
    }
    return next;
}

TrainTrace train_gd(const ModelParams& params0, const RegressionDataset& data,
                    const GdOptions& options) {
    network::validate_params(params0);
    require_relu(params0, "train_gd");
    validate_dataset(data);
    if (options.iters < 1) throw ValidationError("train_gd: iters must be at least 1");
    if (data.points.front().coords.size() != static_cast<std::size_t>(params0.d_aug))
        throw ValidationError("train_gd: dataset dimension does not match the model");

    TrainTrace trace;
    trace.problem = "regression";
    trace.optimizer = "gd";
    trace.activation = network::activation_name(params0.activation);
    trace.n = static_cast<std::int64_t>(data.size());
    trace.m = params0.m;

    trace.gram = gram_inf_relu(data);
    trace.gram.concentration_error = (gram_finite(params0, data) - trace.gram.h_inf).frobenius_norm();
    trace.has_gram = true;
    trace.eta = options.eta_auto ? trace.gram.suggested_eta : options.eta;
    if (!(trace.eta > 0.0) || !std::isfinite(trace.eta))
        throw ValidationError("train_gd: resolved eta must be positive");

    const DenseMatrix w0 = params0.weights;
    const std::size_t d_aug = static_cast<std::size_t>(params0.d_aug);
    ModelParams params = params0;
    std::vector<double> u = predict(params, data);
    double prev_loss = kUnset;
    double initial_loss = kUnset;

    for (std::int64_t k = 0; k <= options.iters; ++k) {
        TraceRecord rec;
        rec.iter = k;
        std::vector<double> res(data.size());
        double loss = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            res[i] = data.targets[i] - u[i];
            loss += 0.5 * res[i] * res[i];
        }
        rec.loss = loss;
        rec.res_norm = std::sqrt(2.0 * loss);
        if (k == 0) {
            initial_loss = loss;
            trace.initial_res_norm = rec.res_norm;
        } else {
            rec.step_ratio = loss / prev_loss;
        }
        prev_loss = loss;

        if (options.diagnostics.drift) {
            double drift = 0.0;
            for (std::int64_t r = 0; r < params.m; ++r) {
                const double* wr = params.weights.row_ptr(static_cast<std::size_t>(r));
                const double* w0r = w0.row_ptr(static_cast<std::size_t>(r));
                double sq = 0.0;
                for (std::size_t c = 0; c < d_aug; ++c) {
                    const double dc = wr[c] - w0r[c];
                    sq += dc * dc;
                }
                drift = std::max(drift, sq);
            }
            rec.drift_max = std::sqrt(drift);
        }

        DenseMatrix h_now;
        if (options.diagnostics.gram) {
            h_now = gram_finite(params, data);
            rec.lambda_min_h = numerics::sym_eig_extremes(h_now).lambda_min;
        }

        if (!std::isfinite(loss) || loss > kDivergenceFactor * std::max(initial_loss, 1e-300)) {
            trace.diverged = true;
            trace.records.push_back(rec);
            break;
        }
        if (k == options.iters) {
            trace.records.push_back(rec);
            break;
        }

        const bool need_grad_rows = options.diagnostics.recursion || options.diagnostics.gram;
        DenseMatrix g;
        if (need_grad_rows) g = grad_matrix(params, data);

        ModelParams next = gd_step(params, data, trace.eta);
        std::vector<double> u_next = predict(next, data);

        if (need_grad_rows) {
            std::vector<double> dw(next.weights.data().size());
            for (std::size_t idx = 0; idx < dw.size(); ++idx)
                dw[idx] = next.weights.data()[idx] - params.weights.data()[idx];
            // linear term of the step, via the gradient rows
            const std::vector<double> i2_jac = numerics::matvec(g, dw);
            double i1_sq = 0.0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                const double i1 = u_next[i] - u[i] - i2_jac[i];
                i1_sq += i1 * i1;
            }
            rec.i1_norm = std::sqrt(i1_sq);

            if (options.diagnostics.gram) {
                // same linear term through the assembled kernel
                const std::vector<double> h_res = numerics::matvec(h_now, res);
                double gap_sq = 0.0, ref_sq = 0.0;
                for (std::size_t i = 0; i < data.size(); ++i) {
                    const double i2_gram = trace.eta * h_res[i];
                    gap_sq += (i2_jac[i] - i2_gram) * (i2_jac[i] - i2_gram);
                    ref_sq += i2_gram * i2_gram;
                }
                rec.i2_rel_gap = std::sqrt(gap_sq) / std::max(std::sqrt(ref_sq), 1e-30);
            }
        }

        trace.records.push_back(rec);
        params = std::move(next);
        u = std::move(u_next);
    }
    return trace;
}

std::string dataset_to_json(const RegressionDataset& data) {
    nlohmann::json j;
    j["n"] = data.points.size();
    j["d_aug"] = data.points.empty() ? 0 : data.points.front().coords.size();
    nlohmann::json pts = nlohmann::json::array();
    for (const AugmentedPoint& p : data.points) pts.push_back(p.coords);
    j["points"] = pts;
    j["targets"] = data.targets;
    return j.dump(2);
}

}  // namespace gramflow::regression
