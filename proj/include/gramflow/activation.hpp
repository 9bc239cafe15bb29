#pragma once

#include <string>

namespace gramflow::network {

// The three activations the trainers understand. Relu is first-order
// only (regression); ReluCubed and SmoothTanh carry the derivatives the
// PDE residual needs.
enum class ActivationKind {
    Relu,       // max(z, 0)
    ReluCubed,  // max(z, 0)^3
    SmoothTanh, // tanh(z)
};

// sigma and its derivatives: order 0..1 for Relu, 0..3 otherwise.
// Kink indicators close at zero (1{z >= 0}), so ReluCubed has
// sigma'''(0) = 6. Unsupported orders raise ValidationError.
double activation_eval(ActivationKind kind, int order, double z);

// highest derivative order activation_eval accepts for this kind
int max_derivative_order(ActivationKind kind);

// config-facing tags: "relu", "relu3", "tanh"
std::string activation_name(ActivationKind kind);
ActivationKind activation_from_name(const std::string& name);

}  // namespace gramflow::network
