#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gramflow/network.hpp"
#include "gramflow/trace.hpp"

namespace gramflow::pinn {

using network::ActivationKind;
using network::AugmentedPoint;
using network::ModelParams;
using numerics::DenseMatrix;

// Heat-type problem u_t - laplace(u) = f on (0,T) x Omega with data g on
// the initial slice and the lateral boundary. The domain is the box
// [0, 1/sqrt(d+1)]^d with T = 1/sqrt(d+1), which keeps every augmented
// space-time point inside the sqrt(2) ball.
struct PdeInstance {
    enum class Kind { Zero, PolySine };

    std::string name;
    Kind kind = Kind::Zero;
    std::int64_t d = 1;          // spatial dimension
    double time_extent = 0.0;    // T
    double space_side = 0.0;     // box edge length

    // xt = (x_0, x_1, ..., x_d) raw space-time coordinates
    double exact(const std::vector<double>& xt) const;
    double source(const std::vector<double>& xt) const;          // f = u*_t - laplace(u*)
    double boundary_value(const std::vector<double>& xt) const;  // g = u* restricted
};

// catalog lookup: "poly-sine" (u* = x_0 + sin(x_1 + ... + x_d)) or
// "zero"; unknown names raise ValidationError
PdeInstance make_instance(const std::string& name, std::int64_t d);

// Collocation samples. Augmented points carry (x_0, x, 1), i.e.
// d_aug = d + 2, with the time weight in slot 0, spatial weights in
// slots 1..d and the bias in slot d+1.
struct PinnDataset {
    std::string instance;
    std::int64_t d = 0;
    std::vector<AugmentedPoint> interior;
    std::vector<AugmentedPoint> boundary;
    std::vector<double> f_values;  // source at the interior points
    std::vector<double> g_values;  // data at the boundary points

    std::size_t n1() const { return interior.size(); }
    std::size_t n2() const { return boundary.size(); }
    std::size_t total() const { return interior.size() + boundary.size(); }
    std::int64_t d_aug() const { return d + 2; }
};

void validate_dataset(const PinnDataset& data);

// Interior points uniform over the open space-time box; boundary points
// split between the initial slice and the lateral faces in proportion
// to their measures (ties rounded toward the initial slice). Resamples
// if any two points in the union come out parallel; 100 attempts max.
PinnDataset sample_dataset(const PdeInstance& instance, std::int64_t n1, std::int64_t n2,
                           std::uint64_t seed);

// PDE and data residuals, each block scaled by 1/sqrt(its count):
//   s_p = (phi_t - laplace(phi) - f)(x_p) / sqrt(n1)
//   h_j = (phi - g)(y_j) / sqrt(n2)
struct ResidualPair {
    std::vector<double> s;
    std::vector<double> h;

    std::vector<double> stacked() const;
    double norm() const;
};

// requires an activation with two derivatives (relu3 or tanh)
ResidualPair residuals(const ModelParams& params, const PinnDataset& data);

// 0.5 (||s||^2 + ||h||^2)
double pinn_loss(const ModelParams& params, const PinnDataset& data);

// (n1+n2) x (m * (d+2)) matrix of residual derivatives with respect to
// the flattened first layer; rows ordered interior block then boundary
// block, columns in weight layout
DenseMatrix jacobian(const ModelParams& params, const PinnDataset& data);

// instantaneous kernel J J^T
DenseMatrix gram_pinn(const DenseMatrix& jac);

// Monte Carlo estimate of the limiting kernel: the expectation over a
// standard-normal single neuron of its residual-gradient outer products.
// Draws are split into 50 fixed blocks whose leave-one-out estimates
// give the jackknife stderr reported for lambda0.
GramReport gram_inf_mc(const PinnDataset& data, ActivationKind activation, std::int64_t n_mc,
                       std::uint64_t seed);

// one full-batch gradient step on the residual loss
ModelParams gd_step_pinn(const ModelParams& params, const PinnDataset& data, double eta);

struct NgdStepMeta {
    double lambda_min_h = 0.0;  // smallest eigenvalue of J J^T
    bool ridge_fallback = false;
    double lin_defect = 0.0;    // ||J dw + eta * residual||
};

struct NgdStepResult {
    ModelParams params;
    NgdStepMeta meta;
};

// natural-gradient step dw = -eta J^T (J J^T)^{-1} r; raises
// NumericalError naming lambda_min if the kernel solve fails outright
NgdStepResult ngd_step(const ModelParams& params, const PinnDataset& data, double eta);

enum class Optimizer { Gd, Ngd };

struct PinnTrainOptions {
    Optimizer optimizer = Optimizer::Gd;
    std::int64_t iters = 500;
    bool eta_auto = true;   // gd: 0.5 / ||H_inf||_2 from the MC kernel; ngd: 0.5
    double eta = 0.0;
    DiagnosticsFlags diagnostics;
    std::int64_t n_mc = 50000;      // draws for the limiting-kernel estimate
    std::uint64_t mc_seed = 1;
};

// numerical floor below which natural-gradient training stops
inline constexpr double kNgdLossFloor = 1e-24;

TrainTrace train(const ModelParams& params0, const PinnDataset& data,
                 const PinnTrainOptions& options);

std::string dataset_to_json(const PinnDataset& data);

}  // namespace gramflow::pinn
