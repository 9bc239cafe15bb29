#include "gramflow/pinn.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "gramflow/errors.hpp"
#include "gramflow/numerics.hpp"
#include "gramflow/parallel.hpp"
#include "gramflow/rng.hpp"

namespace gramflow::pinn {

namespace {

constexpr double kParallelTol = 1e-12;
constexpr double kDivergenceFactor = 1e6;
constexpr int kMaxSampleAttempts = 100;
constexpr std::int64_t kJackknifeBlocks = 50;

double point_dot(const AugmentedPoint& a, const AugmentedPoint& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.coords.size(); ++k) s += a.coords[k] * b.coords[k];
    return s;
}

void require_second_order(ActivationKind kind, const char* who) {
    if (network::max_derivative_order(kind) < 3)
        throw ValidationError(std::string(who) +
                              ": the PDE residual needs sigma'' (use relu3 or tanh)");
}

// raw space-time coordinates (x_0 .. x_d) of an augmented point
std::vector<double> raw_coords(const AugmentedPoint& p) {
    return std::vector<double>(p.coords.begin(), p.coords.end() - 1);
}

// squared norm of the spatial weight slice w_1..w_d
double spatial_sq(const double* w, std::int64_t d) {
    double s = 0.0;
    for (std::int64_t c = 1; c <= d; ++c) s += w[c] * w[c];
    return s;
}

}  // namespace

double PdeInstance::exact(const std::vector<double>& xt) const {
    if (kind == Kind::Zero) return 0.0;
    double spatial_sum = 0.0;
    for (std::size_t i = 1; i < xt.size(); ++i) spatial_sum += xt[i];
    return xt[0] + std::sin(spatial_sum);
}

double PdeInstance::source(const std::vector<double>& xt) const {
    if (kind == Kind::Zero) return 0.0;
    // u*_t = 1 and laplace(u*) = -d sin(x_1 + ... + x_d)
    double spatial_sum = 0.0;
    for (std::size_t i = 1; i < xt.size(); ++i) spatial_sum += xt[i];
    return 1.0 + static_cast<double>(d) * std::sin(spatial_sum);
}

double PdeInstance::boundary_value(const std::vector<double>& xt) const {
    return exact(xt);
}

PdeInstance make_instance(const std::string& name, std::int64_t d) {
    if (d < 1) throw ValidationError("make_instance: spatial dimension must be positive");
    PdeInstance inst;
    inst.name = name;
    inst.d = d;
    inst.time_extent = 1.0 / std::sqrt(static_cast<double>(d + 1));
    inst.space_side = inst.time_extent;
    if (name == "zero") inst.kind = PdeInstance::Kind::Zero;
    else if (name == "poly-sine") inst.kind = PdeInstance::Kind::PolySine;
    else throw ValidationError("make_instance: unknown instance '" + name +
                               "' (catalog: poly-sine, zero)");
    return inst;
}

void validate_dataset(const PinnDataset& data) {
    if (data.interior.empty() || data.boundary.empty())
        throw ValidationError("pinn dataset needs at least one interior and one boundary point");
    if (data.f_values.size() != data.interior.size() ||
        data.g_values.size() != data.boundary.size())
        throw ValidationError("pinn dataset: value arrays do not match point counts");
    const std::size_t d_aug = static_cast<std::size_t>(data.d_aug());

    std::vector<const AugmentedPoint*> all;
    all.reserve(data.total());
    for (const AugmentedPoint& p : data.interior) all.push_back(&p);
    for (const AugmentedPoint& p : data.boundary) all.push_back(&p);
    for (const AugmentedPoint* p : all) {
        network::validate_augmented(*p);
        if (p->coords.size() != d_aug)
            throw ValidationError("pinn dataset: point dimension does not match d + 2");
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        const double ni = std::sqrt(point_dot(*all[i], *all[i]));
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            const double nj = std::sqrt(point_dot(*all[j], *all[j]));
            const double cosine = point_dot(*all[i], *all[j]) / (ni * nj);
            if (std::abs(cosine) >= 1.0 - kParallelTol)
                throw ValidationError("pinn dataset: collocation points " + std::to_string(i) +
                                      " and " + std::to_string(j) + " are parallel");
        }
    }
}

PinnDataset sample_dataset(const PdeInstance& instance, std::int64_t n1, std::int64_t n2,
                           std::uint64_t seed) {
    if (n1 < 1 || n2 < 1)
        throw ValidationError("sample_dataset: need at least one interior and one boundary point");

    const std::int64_t d = instance.d;
    const double side = instance.space_side;
    const double t_max = instance.time_extent;
    // measure of the initial slice vs the whole space-time boundary;
    // with T = side this reduces to 1 / (1 + 2d)
    const double initial_share = std::pow(side, static_cast<double>(d)) /
                                 (std::pow(side, static_cast<double>(d)) +
                                  2.0 * static_cast<double>(d) * t_max *
                                      std::pow(side, static_cast<double>(d - 1)));
    // ties round toward the initial slice
    const std::int64_t n_initial =
        std::min<std::int64_t>(n2, static_cast<std::int64_t>(std::floor(
                                       static_cast<double>(n2) * initial_share + 0.5)));

    for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
        const std::uint64_t salt = static_cast<std::uint64_t>(attempt) << 16;
        CounterRng interior_rng(seed, streams::kPinnInterior | salt);
        CounterRng boundary_rng(seed, streams::kPinnBoundary | salt);

        PinnDataset data;
        data.instance = instance.name;
        data.d = d;
        const std::size_t d_aug = static_cast<std::size_t>(d + 2);

        for (std::int64_t i = 0; i < n1; ++i) {
            AugmentedPoint p;
            p.coords.resize(d_aug);
            p.coords[0] = t_max * interior_rng.uniform01();
            for (std::int64_t c = 1; c <= d; ++c)
                p.coords[static_cast<std::size_t>(c)] = side * interior_rng.uniform01();
            p.coords.back() = 1.0;
            data.f_values.push_back(instance.source(raw_coords(p)));
            data.interior.push_back(std::move(p));
        }
        for (std::int64_t j = 0; j < n2; ++j) {
            AugmentedPoint p;
            p.coords.resize(d_aug, 0.0);
            if (j < n_initial) {
                // initial slice {0} x Omega
                for (std::int64_t c = 1; c <= d; ++c)
                    p.coords[static_cast<std::size_t>(c)] = side * boundary_rng.uniform01();
            } else {
                // lateral faces [0,T] x boundary(Omega); all 2d faces carry equal measure
                const std::int64_t face = static_cast<std::int64_t>(boundary_rng.below(
                    static_cast<std::uint64_t>(2 * d)));
                p.coords[0] = t_max * boundary_rng.uniform01();
                for (std::int64_t c = 1; c <= d; ++c)
                    p.coords[static_cast<std::size_t>(c)] = side * boundary_rng.uniform01();
                p.coords[static_cast<std::size_t>(face / 2 + 1)] = (face % 2 == 0) ? 0.0 : side;
            }
            p.coords.back() = 1.0;
            data.g_values.push_back(instance.boundary_value(raw_coords(p)));
            data.boundary.push_back(std::move(p));
        }
        try {
            validate_dataset(data);
            return data;
        } catch (const ValidationError&) {
            continue;
        }
    }
    throw ValidationError("sample_dataset: no valid collocation set after 100 attempts");
}

std::vector<double> ResidualPair::stacked() const {
    std::vector<double> r;
    r.reserve(s.size() + h.size());
    r.insert(r.end(), s.begin(), s.end());
    r.insert(r.end(), h.begin(), h.end());
    return r;
}

double ResidualPair::norm() const {
    double sq = 0.0;
    for (double v : s) sq += v * v;
    for (double v : h) sq += v * v;
    return std::sqrt(sq);
}

ResidualPair residuals(const ModelParams& params, const PinnDataset& data) {
    network::validate_params(params);
    require_second_order(params.activation, "residuals");
    if (static_cast<std::size_t>(params.d_aug) != static_cast<std::size_t>(data.d_aug()))
        throw ValidationError("residuals: model dimension does not match dataset (d + 2)");

    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(params.m));
    const double inv_sqrt_n1 = 1.0 / std::sqrt(static_cast<double>(data.n1()));
    const double inv_sqrt_n2 = 1.0 / std::sqrt(static_cast<double>(data.n2()));
    const std::int64_t d = data.d;

    ResidualPair out;
    out.s.resize(data.n1());
    out.h.resize(data.n2());

    for (std::size_t p = 0; p < data.n1(); ++p) {
        const AugmentedPoint& x = data.interior[p];
        double phi_t = 0.0, lap = 0.0;
        for (std::int64_t r = 0; r < params.m; ++r) {
            const double* w = params.weights.row_ptr(static_cast<std::size_t>(r));
            const double a = params.signs[static_cast<std::size_t>(r)];
            const double z = network::dot(x, w);
            phi_t += a * network::activation_eval(params.activation, 1, z) * w[0];
            lap += a * network::activation_eval(params.activation, 2, z) * spatial_sq(w, d);
        }
        out.s[p] = inv_sqrt_n1 * (inv_sqrt_m * (phi_t - lap) - data.f_values[p]);
    }
    for (std::size_t j = 0; j < data.n2(); ++j) {
        const double phi = network::forward(params, data.boundary[j]);
        out.h[j] = inv_sqrt_n2 * (phi - data.g_values[j]);
    }
    return out;
}

double pinn_loss(const ModelParams& params, const PinnDataset& data) {
    const ResidualPair r = residuals(params, data);
    double sq = 0.0;
    for (double v : r.s) sq += v * v;
    for (double v : r.h) sq += v * v;
    return 0.5 * sq;
}

DenseMatrix jacobian(const ModelParams& params, const PinnDataset& data) {
    network::validate_params(params);
    require_second_order(params.activation, "jacobian");
    if (static_cast<std::size_t>(params.d_aug) != static_cast<std::size_t>(data.d_aug()))
        throw ValidationError("jacobian: model dimension does not match dataset (d + 2)");

    const std::int64_t d = data.d;
    const std::size_t d_aug = static_cast<std::size_t>(params.d_aug);
    const std::size_t n1 = data.n1();
    const std::size_t n_total = data.total();
    const double interior_scale =
        1.0 / std::sqrt(static_cast<double>(params.m) * static_cast<double>(data.n1()));
    const double boundary_scale =
        1.0 / std::sqrt(static_cast<double>(params.m) * static_cast<double>(data.n2()));

    DenseMatrix jac(n_total, static_cast<std::size_t>(params.m) * d_aug);
    parallel_chunks(n_total, [&](std::size_t row_begin, std::size_t row_end) {
        for (std::size_t row = row_begin; row < row_end; ++row) {
            double* out = jac.row_ptr(row);
            if (row < n1) {
                const AugmentedPoint& x = data.interior[row];
                for (std::int64_t r = 0; r < params.m; ++r) {
                    const double* w = params.weights.row_ptr(static_cast<std::size_t>(r));
                    const double z = network::dot(x, w);
                    const double s1 = network::activation_eval(params.activation, 1, z);
                    const double s2 = network::activation_eval(params.activation, 2, z);
                    const double s3 = network::activation_eval(params.activation, 3, z);
                    const double wsq = spatial_sq(w, d);
                    const double coef = params.signs[static_cast<std::size_t>(r)] * interior_scale;
                    double* block = out + static_cast<std::size_t>(r) * d_aug;
                    // d/dw of sigma'(z) w_0 - sigma''(z) |w_spatial|^2
                    for (std::size_t c = 0; c < d_aug; ++c) {
                        double v = (s2 * w[0] - s3 * wsq) * x.coords[c];
                        if (c == 0) v += s1;
                        else if (c <= static_cast<std::size_t>(d)) v -= 2.0 * s2 * w[c];
                        block[c] = coef * v;
                    }
                }
            } else {
                const AugmentedPoint& y = data.boundary[row - n1];
                for (std::int64_t r = 0; r < params.m; ++r) {
                    const double* w = params.weights.row_ptr(static_cast<std::size_t>(r));
                    const double s1 = network::activation_eval(params.activation, 1,
                                                               network::dot(y, w));
                    const double coef =
                        params.signs[static_cast<std::size_t>(r)] * boundary_scale * s1;
                    double* block = out + static_cast<std::size_t>(r) * d_aug;
                    for (std::size_t c = 0; c < d_aug; ++c) block[c] = coef * y.coords[c];
                }
            }
        }
    });
    return jac;
}

DenseMatrix gram_pinn(const DenseMatrix& jac) {
    if (jac.rows() == 0) throw ValidationError("gram_pinn: empty jacobian");
    return numerics::gram_of_rows(jac);
}

GramReport gram_inf_mc(const PinnDataset& data, ActivationKind activation, std::int64_t n_mc,
                       std::uint64_t seed) {
    validate_dataset(data);
    require_second_order(activation, "gram_inf_mc");
    if (n_mc < 100) throw ValidationError("gram_inf_mc: need at least 100 draws");

    const std::size_t n = data.total();
    const std::size_t n1 = data.n1();
    const std::size_t d_aug = static_cast<std::size_t>(data.d_aug());
    const std::int64_t d = data.d;
    const double inv_sqrt_n1 = 1.0 / std::sqrt(static_cast<double>(data.n1()));
    const double inv_sqrt_n2 = 1.0 / std::sqrt(static_cast<double>(data.n2()));

    // per-block kernel sums; combining them in block order keeps the
    // result identical for any worker count
    const std::int64_t blocks = std::min<std::int64_t>(kJackknifeBlocks, n_mc);
    std::vector<DenseMatrix> block_sum(static_cast<std::size_t>(blocks), DenseMatrix(n, n));
    std::vector<std::int64_t> block_count(static_cast<std::size_t>(blocks), 0);

    parallel_chunks(static_cast<std::size_t>(blocks), [&](std::size_t b_begin, std::size_t b_end) {
        std::vector<double> w(d_aug);
        DenseMatrix g(n, d_aug);  // single-neuron residual gradients at every point
        for (std::size_t b = b_begin; b < b_end; ++b) {
            const std::int64_t t_begin = n_mc * static_cast<std::int64_t>(b) / blocks;
            const std::int64_t t_end = n_mc * (static_cast<std::int64_t>(b) + 1) / blocks;
            block_count[b] = t_end - t_begin;
            CounterRng rng(seed, streams::kGramMc | (static_cast<std::uint64_t>(b) << 16));
            for (std::int64_t t = t_begin; t < t_end; ++t) {
                for (double& c : w) c = rng.normal();
                const double wsq = spatial_sq(w.data(), d);
                for (std::size_t i = 0; i < n; ++i) {
                    double* gi = g.row_ptr(i);
                    if (i < n1) {
                        const AugmentedPoint& x = data.interior[i];
                        const double z = network::dot(x, w.data());
                        const double s1 = network::activation_eval(activation, 1, z);
                        const double s2 = network::activation_eval(activation, 2, z);
                        const double s3 = network::activation_eval(activation, 3, z);
                        for (std::size_t c = 0; c < d_aug; ++c) {
                            double v = (s2 * w[0] - s3 * wsq) * x.coords[c];
                            if (c == 0) v += s1;
                            else if (c <= static_cast<std::size_t>(d)) v -= 2.0 * s2 * w[c];
                            gi[c] = inv_sqrt_n1 * v;
                        }
                    } else {
                        const AugmentedPoint& y = data.boundary[i - n1];
                        const double s1 =
                            network::activation_eval(activation, 1, network::dot(y, w.data()));
                        for (std::size_t c = 0; c < d_aug; ++c)
                            gi[c] = inv_sqrt_n2 * s1 * y.coords[c];
                    }
                }
                DenseMatrix& acc = block_sum[b];
                for (std::size_t i = 0; i < n; ++i) {
                    const double* gi = g.row_ptr(i);
                    for (std::size_t j = i; j < n; ++j) {
                        const double* gj = g.row_ptr(j);
                        double dotv = 0.0;
                        for (std::size_t c = 0; c < d_aug; ++c) dotv += gi[c] * gj[c];
                        acc(i, j) += dotv;
                    }
                }
            }
        }
    });

    DenseMatrix total(n, n);
    for (std::size_t b = 0; b < static_cast<std::size_t>(blocks); ++b)
        for (std::size_t idx = 0; idx < total.data().size(); ++idx)
            total.data()[idx] += block_sum[b].data()[idx];

    GramReport report;
    report.h_inf = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = total(i, j) / static_cast<double>(n_mc);
            report.h_inf(i, j) = v;
            report.h_inf(j, i) = v;
        }
    const numerics::SpectrumSummary s = numerics::sym_eig_extremes(report.h_inf);
    report.lambda0 = s.lambda_min;
    report.spectral_norm = s.spectral_norm;
    report.suggested_eta = 0.5 / s.spectral_norm;

    // block jackknife on lambda0
    std::vector<double> loo(static_cast<std::size_t>(blocks));
    for (std::size_t b = 0; b < static_cast<std::size_t>(blocks); ++b) {
        DenseMatrix h(n, n);
        const double denom = static_cast<double>(n_mc - block_count[b]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                const double v = (total(i, j) - block_sum[b](i, j)) / denom;
                h(i, j) = v;
                h(j, i) = v;
            }
        loo[b] = numerics::sym_eig_extremes(h).lambda_min;
    }
    double mean = 0.0;
    for (double v : loo) mean += v;
    mean /= static_cast<double>(blocks);
    double var = 0.0;
    for (double v : loo) var += (v - mean) * (v - mean);
    report.estimator_stderr =
        std::sqrt(var * static_cast<double>(blocks - 1) / static_cast<double>(blocks));
    report.lambda0_unreliable = report.lambda0 <= 3.0 * report.estimator_stderr;
    return report;
}

namespace {

ModelParams apply_flat_step(const ModelParams& params, const std::vector<double>& dw) {
    ModelParams next = params;
    for (std::size_t idx = 0; idx < dw.size(); ++idx)
        next.weights.data()[idx] = params.weights.data()[idx] + dw[idx];
    return next;
}

struct NgdCore {
    std::vector<double> dw;
    NgdStepMeta meta;
};

NgdCore ngd_core(const DenseMatrix& jac, const std::vector<double>& resid, double eta) {
    const DenseMatrix h = gram_pinn(jac);
    NgdCore core;
    core.meta.lambda_min_h = numerics::sym_eig_extremes(h).lambda_min;
    numerics::SpdSolution sol;
    try {
        sol = numerics::solve_spd(h, resid, 0.0);
    } catch (const NumericalError&) {
        throw NumericalError("ngd_step: kernel solve failed; lambda_min(J J^T) = " +
                             format_double(core.meta.lambda_min_h));
    }
    core.meta.ridge_fallback = sol.ridge_fallback;

    // the factored solve is accurate against the assembled Gram matrix, but the
    // step quality is judged against the operator J J^T itself; polish the
    // solution with residuals evaluated through the jacobian until that gap
    // stops shrinking
    double resid_norm = 0.0;
    for (double v : resid) resid_norm += v * v;
    resid_norm = std::sqrt(resid_norm);
    std::vector<double> x = std::move(sol.x);
    std::vector<double> best = x;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int round = 0; round < 5; ++round) {
        const std::vector<double> hx = numerics::matvec(jac, numerics::matvec_transposed(jac, x));
        std::vector<double> gap(resid.size());
        double gap_sq = 0.0;
        for (std::size_t i = 0; i < gap.size(); ++i) {
            gap[i] = resid[i] - hx[i] - sol.ridge_used * x[i];
            gap_sq += gap[i] * gap[i];
        }
        const double gap_norm = std::sqrt(gap_sq);
        if (!(gap_norm < best_gap)) break;  // hit the rounding floor
        best_gap = gap_norm;
        best = x;
        if (gap_norm <= 1e-13 * resid_norm) break;
        const std::vector<double> dx = numerics::solve_spd(h, gap, sol.ridge_used).x;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
    }

    core.dw = numerics::matvec_transposed(jac, best);
    for (double& v : core.dw) v *= -eta;

    // linearisation defect: J dw should equal -eta * residual exactly
    const std::vector<double> jdw = numerics::matvec(jac, core.dw);
    double defect_sq = 0.0;
    for (std::size_t i = 0; i < resid.size(); ++i) {
        const double e = jdw[i] + eta * resid[i];
        defect_sq += e * e;
    }
    core.meta.lin_defect = std::sqrt(defect_sq);
    return core;
}

}  // namespace

ModelParams gd_step_pinn(const ModelParams& params, const PinnDataset& data, double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("gd_step_pinn: eta must be positive");
    const DenseMatrix jac = jacobian(params, data);
    const std::vector<double> resid = residuals(params, data).stacked();
    std::vector<double> dw = numerics::matvec_transposed(jac, resid);
    for (double& v : dw) v *= -eta;
    return apply_flat_step(params, dw);
}

NgdStepResult ngd_step(const ModelParams& params, const PinnDataset& data, double eta) {
    if (!(eta > 0.0) || eta > 1.0)
        throw ValidationError("ngd_step: eta must lie in (0, 1]");
    const DenseMatrix jac = jacobian(params, data);
    const std::vector<double> resid = residuals(params, data).stacked();
    NgdCore core = ngd_core(jac, resid, eta);
    return NgdStepResult{apply_flat_step(params, core.dw), core.meta};
}

TrainTrace train(const ModelParams& params0, const PinnDataset& data,
                 const PinnTrainOptions& options) {
    network::validate_params(params0);
    require_second_order(params0.activation, "train");
    validate_dataset(data);
    if (options.iters < 1) throw ValidationError("train: iters must be at least 1");
    if (static_cast<std::size_t>(params0.d_aug) != static_cast<std::size_t>(data.d_aug()))
        throw ValidationError("train: model dimension does not match dataset (d + 2)");

    const bool ngd = options.optimizer == Optimizer::Ngd;

    TrainTrace trace;
    trace.problem = "pinn";
    trace.optimizer = ngd ? "ngd" : "gd";
    trace.activation = network::activation_name(params0.activation);
    trace.n = static_cast<std::int64_t>(data.total());
    trace.m = params0.m;

    trace.gram = gram_inf_mc(data, params0.activation, options.n_mc, options.mc_seed);
    trace.gram.concentration_error =
        (gram_pinn(jacobian(params0, data)) - trace.gram.h_inf).frobenius_norm();
    trace.has_gram = true;

    if (options.eta_auto) trace.eta = ngd ? 0.5 : trace.gram.suggested_eta;
    else trace.eta = options.eta;
    if (!(trace.eta > 0.0) || !std::isfinite(trace.eta))
        throw ValidationError("train: resolved eta must be positive");
    if (ngd && trace.eta > 1.0)
        throw ValidationError("train: natural-gradient eta must lie in (0, 1]");

    const DenseMatrix w0 = params0.weights;
    const std::size_t d_aug = static_cast<std::size_t>(params0.d_aug);
    ModelParams params = params0;
    std::vector<double> resid = residuals(params, data).stacked();
    double prev_loss = kUnset;
    double initial_loss = kUnset;

    for (std::int64_t k = 0; k <= options.iters; ++k) {
        TraceRecord rec;
        rec.iter = k;
        double loss = 0.0;
        for (double v : resid) loss += 0.5 * v * v;
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

        if (!std::isfinite(loss) || loss > kDivergenceFactor * std::max(initial_loss, 1e-300)) {
            trace.diverged = true;
            trace.records.push_back(rec);
            break;
        }
        if (ngd && loss < kNgdLossFloor) {
            trace.hit_floor = true;
            trace.records.push_back(rec);
            break;
        }
        if (k == options.iters) {
            trace.records.push_back(rec);
            break;
        }

        const bool need_jac = ngd || options.diagnostics.recursion || options.diagnostics.gram;
        DenseMatrix jac;
        DenseMatrix h_now;
        if (need_jac) jac = jacobian(params, data);
        if (!ngd && options.diagnostics.gram) {
            h_now = gram_pinn(jac);
            rec.lambda_min_h = numerics::sym_eig_extremes(h_now).lambda_min;
        }

        std::vector<double> dw;
        if (ngd) {
            NgdCore core = ngd_core(jac, resid, trace.eta);
            rec.lambda_min_h = core.meta.lambda_min_h;
            rec.lin_defect = core.meta.lin_defect;
            if (core.meta.ridge_fallback) ++trace.ridge_fallbacks;
            dw = std::move(core.dw);
        } else {
            dw = numerics::matvec_transposed(jac, resid);
            for (double& v : dw) v *= -trace.eta;
        }

        ModelParams next = apply_flat_step(params, dw);
        std::vector<double> resid_next = residuals(next, data).stacked();

        if (!ngd && options.diagnostics.recursion) {
            // Taylor remainder of the residual map across this step
            const std::vector<double> jdw = numerics::matvec(jac, dw);
            double i1_sq = 0.0;
            for (std::size_t i = 0; i < resid.size(); ++i) {
                const double i1 = resid_next[i] - resid[i] - jdw[i];
                i1_sq += i1 * i1;
            }
            rec.i1_norm = std::sqrt(i1_sq);

            if (options.diagnostics.gram) {
                // the same linear term through the assembled kernel
                const std::vector<double> h_res = numerics::matvec(h_now, resid);
                double gap_sq = 0.0, ref_sq = 0.0;
                for (std::size_t i = 0; i < resid.size(); ++i) {
                    const double i2_gram = -trace.eta * h_res[i];
                    gap_sq += (jdw[i] - i2_gram) * (jdw[i] - i2_gram);
                    ref_sq += i2_gram * i2_gram;
                }
                rec.i2_rel_gap = std::sqrt(gap_sq) / std::max(std::sqrt(ref_sq), 1e-30);
            }
        }

        trace.records.push_back(rec);
        params = std::move(next);
        resid = std::move(resid_next);
    }
    return trace;
}

std::string dataset_to_json(const PinnDataset& data) {
    nlohmann::json j;
    j["instance"] = data.instance;
    j["d"] = data.d;
    j["n1"] = data.n1();
    j["n2"] = data.n2();
    nlohmann::json interior = nlohmann::json::array();
    for (const AugmentedPoint& p : data.interior) interior.push_back(p.coords);
    nlohmann::json boundary = nlohmann::json::array();
    for (const AugmentedPoint& p : data.boundary) boundary.push_back(p.coords);
    j["interior"] = interior;
    j["boundary"] = boundary;
    j["f_values"] = data.f_values;
    j["g_values"] = data.g_values;
    return j.dump(2);
}

}  // namespace gramflow::pinn
