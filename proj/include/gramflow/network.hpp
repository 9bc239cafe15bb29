#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gramflow/activation.hpp"
#include "gramflow/matrix.hpp"

namespace gramflow::network {

using numerics::DenseMatrix;

// An input point with the constant-1 coordinate already appended; the
// scaling conventions upstream keep the Euclidean norm at or below
// sqrt(2).
struct AugmentedPoint {
    std::vector<double> coords;
};

// throws ValidationError unless last coordinate is exactly 1 and the
// norm is within sqrt(2) (plus a small tolerance for corner points)
void validate_augmented(const AugmentedPoint& p);

double dot(const AugmentedPoint& p, const double* w);

// Two-layer width-m model: f(x) = (1/sqrt(m)) sum_r a_r sigma(w_r . x).
// First-layer rows live in `weights` (m x d_aug, row-major); the fixed
// second layer `signs` holds the +-1 coefficients a_r.
struct ModelParams {
    std::int64_t m = 0;
    std::int64_t d_aug = 0;
    DenseMatrix weights;
    std::vector<double> signs;
    ActivationKind activation = ActivationKind::Relu;
};

void validate_params(const ModelParams& p);

// Standard-normal first layer and uniform +-1 second layer, drawn from
// the counter-based generator: weights row-major first (stream 1), then
// signs (stream 2). Identical (m, d_aug, seed) inputs reproduce
// bit-identical parameters.
ModelParams init_params(std::int64_t m, std::int64_t d_aug, ActivationKind activation,
                        std::uint64_t seed);

// network output at one augmented point
double forward(const ModelParams& params, const AugmentedPoint& x);

// gradient of forward() with respect to the flattened first layer,
// laid out like the weight matrix: block r holds
// (a_r / sqrt(m)) sigma'(w_r . x) x.
std::vector<double> output_grad(const ModelParams& params, const AugmentedPoint& x);

// round-trippable JSON snapshot of the parameters
std::string params_to_json(const ModelParams& p);
ModelParams params_from_json(const std::string& text);

}  // namespace gramflow::network
