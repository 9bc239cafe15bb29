#include "gramflow/network.hpp"

#include <cmath>

#include <json.hpp>

#include "gramflow/errors.hpp"
#include "gramflow/rng.hpp"

namespace gramflow::network {

namespace {
constexpr double kSqrt2Slack = 1e-9;
}

void validate_augmented(const AugmentedPoint& p) {
    if (p.coords.empty()) throw ValidationError("augmented point is empty");
    if (p.coords.back() != 1.0)
        throw ValidationError("augmented point must end with the constant coordinate 1");
    double sq = 0.0;
    for (double c : p.coords) {
        if (!std::isfinite(c)) throw ValidationError("augmented point has non-finite coordinate");
        sq += c * c;
    }
    if (std::sqrt(sq) > std::sqrt(2.0) + kSqrt2Slack)
        throw ValidationError("augmented point norm exceeds sqrt(2)");
}

double dot(const AugmentedPoint& p, const double* w) {
    double s = 0.0;
    for (std::size_t k = 0; k < p.coords.size(); ++k) s += p.coords[k] * w[k];
    return s;
}

void validate_params(const ModelParams& p) {
    if (p.m < 1) throw ValidationError("model width m must be at least 1");
    if (p.d_aug < 2) throw ValidationError("augmented dimension must be at least 2");
    if (p.weights.rows() != static_cast<std::size_t>(p.m) ||
        p.weights.cols() != static_cast<std::size_t>(p.d_aug))
        throw ValidationError("weight matrix shape does not match (m, d_aug)");
    if (p.signs.size() != static_cast<std::size_t>(p.m))
        throw ValidationError("sign vector length does not match m");
    if (!p.weights.all_finite()) throw ValidationError("weights contain non-finite entries");
    for (double a : p.signs)
        if (a != 1.0 && a != -1.0) throw ValidationError("second-layer signs must be +-1");
}

ModelParams init_params(std::int64_t m, std::int64_t d_aug, ActivationKind activation,
                        std::uint64_t seed) {
    if (m < 1) throw ValidationError("init_params: m must be at least 1");
    if (d_aug < 2) throw ValidationError("init_params: d_aug must be at least 2");

    ModelParams p;
    p.m = m;
    p.d_aug = d_aug;
    p.activation = activation;
    p.weights = DenseMatrix(static_cast<std::size_t>(m), static_cast<std::size_t>(d_aug));
    CounterRng weight_rng(seed, streams::kWeights);
    for (double& w : p.weights.data()) w = weight_rng.normal();

    p.signs.resize(static_cast<std::size_t>(m));
    CounterRng sign_rng(seed, streams::kSigns);
    for (double& a : p.signs) a = sign_rng.sign();
    return p;
}

double forward(const ModelParams& params, const AugmentedPoint& x) {
    validate_params(params);
    if (x.coords.size() != static_cast<std::size_t>(params.d_aug))
        throw ValidationError("forward: point dimension does not match d_aug");
    const double scale = 1.0 / std::sqrt(static_cast<double>(params.m));
    double sum = 0.0;
    for (std::int64_t r = 0; r < params.m; ++r) {
        const double z = dot(x, params.weights.row_ptr(static_cast<std::size_t>(r)));
        sum += params.signs[static_cast<std::size_t>(r)] *
               activation_eval(params.activation, 0, z);
    }
    return scale * sum;
}

std::vector<double> output_grad(const ModelParams& params, const AugmentedPoint& x) {
    validate_params(params);
    if (x.coords.size() != static_cast<std::size_t>(params.d_aug))
        throw ValidationError("output_grad: point dimension does not match d_aug");
    const double scale = 1.0 / std::sqrt(static_cast<double>(params.m));
    std::vector<double> g(static_cast<std::size_t>(params.m * params.d_aug), 0.0);
    for (std::int64_t r = 0; r < params.m; ++r) {
        const double* w = params.weights.row_ptr(static_cast<std::size_t>(r));
        const double z = dot(x, w);
        const double coef =
            params.signs[static_cast<std::size_t>(r)] * scale * activation_eval(params.activation, 1, z);
        double* block = g.data() + r * params.d_aug;
        for (std::int64_t k = 0; k < params.d_aug; ++k)
            block[k] = coef * x.coords[static_cast<std::size_t>(k)];
    }
    return g;
}

std::string params_to_json(const ModelParams& p) {
    validate_params(p);
    nlohmann::json j;
    j["m"] = p.m;
    j["d_aug"] = p.d_aug;
    j["activation"] = activation_name(p.activation);
    j["weights"] = p.weights.data();
    j["signs"] = p.signs;
    return j.dump(2);
}

ModelParams params_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("params_from_json: ") + e.what());
    }
    ModelParams p;
    try {
        p.m = j.at("m").get<std::int64_t>();
        p.d_aug = j.at("d_aug").get<std::int64_t>();
        p.activation = activation_from_name(j.at("activation").get<std::string>());
        const auto flat = j.at("weights").get<std::vector<double>>();
        if (flat.size() != static_cast<std::size_t>(p.m * p.d_aug))
            throw ValidationError("params_from_json: weight array has wrong length");
        p.weights = DenseMatrix(static_cast<std::size_t>(p.m), static_cast<std::size_t>(p.d_aug));
        p.weights.data() = flat;
        p.signs = j.at("signs").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("params_from_json: ") + e.what());
    }
    validate_params(p);
    return p;
}

}  // namespace gramflow::network
