#include "gramflow/activation.hpp"

#include <cmath>

#include "gramflow/errors.hpp"

namespace gramflow::network {

double activation_eval(ActivationKind kind, int order, double z) {
    if (order < 0 || order > max_derivative_order(kind))
        throw ValidationError("activation_eval: unsupported derivative order " +
                              std::to_string(order) + " for " + activation_name(kind));
    switch (kind) {
        case ActivationKind::Relu: {
            const double gate = (z >= 0.0) ? 1.0 : 0.0;
            return order == 0 ? gate * z : gate;
        }
        case ActivationKind::ReluCubed: {
            const double gate = (z >= 0.0) ? 1.0 : 0.0;
            switch (order) {
                case 0: return gate * z * z * z;
                case 1: return gate * 3.0 * z * z;
                case 2: return gate * 6.0 * z;
                default: return gate * 6.0;
            }
        }
        case ActivationKind::SmoothTanh: {
            const double t = std::tanh(z);
            const double dsq = 1.0 - t * t;  // sech^2
            switch (order) {
                case 0: return t;
                case 1: return dsq;
                case 2: return -2.0 * t * dsq;
                default: return -2.0 * dsq * (1.0 - 3.0 * t * t);
            }
        }
    }
    throw ValidationError("activation_eval: unknown activation kind");
}

int max_derivative_order(ActivationKind kind) {
    return kind == ActivationKind::Relu ? 1 : 3;
}

std::string activation_name(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::Relu: return "relu";
        case ActivationKind::ReluCubed: return "relu3";
        case ActivationKind::SmoothTanh: return "tanh";
    }
    return "unknown";
}

ActivationKind activation_from_name(const std::string& name) {
    if (name == "relu") return ActivationKind::Relu;
    if (name == "relu3") return ActivationKind::ReluCubed;
    if (name == "tanh") return ActivationKind::SmoothTanh;
    throw ValidationError("unknown activation '" + name + "' (expected relu, relu3, or tanh)");
}

}  // namespace gramflow::network
