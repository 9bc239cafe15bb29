#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gramflow/network.hpp"
#include "gramflow/trace.hpp"

namespace gramflow::regression {

using network::AugmentedPoint;
using network::ModelParams;
using numerics::DenseMatrix;

// Supervised pairs for the L2 task: augmented inputs with norm at most
// sqrt(2), targets bounded by 1 in magnitude, and no two inputs
// parallel (that separation is what keeps the limiting kernel
// nonsingular).
struct RegressionDataset {
    std::vector<AugmentedPoint> points;
    std::vector<double> targets;

    std::size_t size() const { return points.size(); }
};

// throws ValidationError on norm/target violations or on any pair of
// inputs whose normalized dot product is within 1e-12 of +-1
void validate_dataset(const RegressionDataset& data);

// Seeded synthetic task used by the command-line pipeline and the
// checks: inputs uniform in the unit ball of R^d (then augmented with
// the constant coordinate), targets uniform in [-1, 1]. Resamples on a
// parallel pair, giving up after 100 attempts.
RegressionDataset sample_dataset(std::int64_t n, std::int64_t d, std::uint64_t seed);

// predictions at every dataset point
std::vector<double> predict(const ModelParams& params, const RegressionDataset& data);

// sum of squared errors, halved
double regression_loss(const ModelParams& params, const RegressionDataset& data);

// Instantaneous kernel of the first-layer gradients:
//   H_ij = (x_i . x_j) (1/m) sum_r 1{w_r . x_i >= 0} 1{w_r . x_j >= 0}.
// Relu-only.
DenseMatrix gram_finite(const ModelParams& params, const RegressionDataset& data);

// Closed-form infinite-width kernel for Relu features:
//   H_ij = (x_i . x_j) (pi - theta_ij) / (2 pi),
// theta_ij the angle between x_i and x_j. Packs lambda0, the spectral
// norm, and the conservative step size 0.5 / ||H||_2 into a GramReport.
GramReport gram_inf_relu(const RegressionDataset& data);

// one full-batch gradient-descent step at learning rate eta
ModelParams gd_step(const ModelParams& params, const RegressionDataset& data, double eta);

struct GdOptions {
    std::int64_t iters = 500;
    bool eta_auto = true;   // use the Gram report's suggested step size
    double eta = 0.0;       // used when eta_auto is false
    DiagnosticsFlags diagnostics;
};

// Full-batch gradient descent with per-iteration diagnostics. The trace
// holds iters+1 records (state at k = 0..iters); a loss explosion past
// 1e6 x the initial loss stops training and marks the trace diverged.
TrainTrace train_gd(const ModelParams& params0, const RegressionDataset& data,
                    const GdOptions& options);

std::string dataset_to_json(const RegressionDataset& data);

}  // namespace gramflow::regression
