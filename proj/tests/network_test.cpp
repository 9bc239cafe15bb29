#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gramflow/errors.hpp"
#include "gramflow/network.hpp"
#include "gramflow/numerics.hpp"
#include "gramflow/rng.hpp"

using namespace gramflow;
using network::ActivationKind;
using network::AugmentedPoint;
using network::ModelParams;

namespace {

AugmentedPoint seeded_point(std::int64_t d, std::uint64_t seed) {
    CounterRng rng(seed, streams::kRegressionPoints);
    std::vector<double> x(d + 1);
    double nrm = 0.0;
    for (std::int64_t i = 0; i < d; ++i) {
        x[i] = rng.normal();
        nrm += x[i] * x[i];
    }
    nrm = std::sqrt(nrm);
    const double radius = 0.9 * rng.uniform01();
    for (std::int64_t i = 0; i < d; ++i) x[i] *= radius / (nrm > 0 ? nrm : 1.0);
    x[d] = 1.0;
    return AugmentedPoint{x};
}

}  // namespace

TEST_CASE("activation values and derivatives match hand values") {
    // cubed ramp at z = 2: z^3, 3z^2, 6z, 6
    CHECK(network::activation_eval(ActivationKind::ReluCubed, 0, 2.0) == 8.0);
    CHECK(network::activation_eval(ActivationKind::ReluCubed, 1, 2.0) == 12.0);
    CHECK(network::activation_eval(ActivationKind::ReluCubed, 2, 2.0) == 12.0);
    CHECK(network::activation_eval(ActivationKind::ReluCubed, 3, 2.0) == 6.0);
    for (int order = 0; order <= 3; ++order)
        CHECK(network::activation_eval(ActivationKind::ReluCubed, order, -2.0) == 0.0);
    // the gate closes at zero from the right
    CHECK(network::activation_eval(ActivationKind::ReluCubed, 3, 0.0) == 6.0);
    CHECK(network::activation_eval(ActivationKind::Relu, 0, 1.5) == 1.5);
    CHECK(network::activation_eval(ActivationKind::Relu, 1, 0.0) == 1.0);
    CHECK(network::activation_eval(ActivationKind::Relu, 1, -0.1) == 0.0);
    // smooth activation at zero: value 0 and derivative pattern 1, 0, -2
    CHECK(network::activation_eval(ActivationKind::SmoothTanh, 0, 0.0) == 0.0);
    CHECK(network::activation_eval(ActivationKind::SmoothTanh, 1, 0.0) == 1.0);
    CHECK(network::activation_eval(ActivationKind::SmoothTanh, 2, 0.0) == 0.0);
    CHECK(network::activation_eval(ActivationKind::SmoothTanh, 3, 0.0) == -2.0);
}

TEST_CASE("smooth activation derivatives agree with finite differences") {
    for (double z : {-1.3, -0.2, 0.4, 2.1}) {
        for (int order = 1; order <= 3; ++order) {
            auto f = [order](const std::vector<double>& w) {
                return network::activation_eval(ActivationKind::SmoothTanh, order - 1, w[0]);
            };
            const double fd = numerics::finite_diff_grad(f, {z})[0];
            const double an = network::activation_eval(ActivationKind::SmoothTanh, order, z);
            CHECK(an == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("derivative orders past the activation's smoothness are rejected") {
    CHECK_THROWS_AS((void)network::activation_eval(ActivationKind::Relu, 2, 1.0), ValidationError);
    CHECK_THROWS_AS((void)network::activation_eval(ActivationKind::ReluCubed, 4, 1.0),
                    ValidationError);
    CHECK(network::max_derivative_order(ActivationKind::Relu) == 1);
    CHECK(network::max_derivative_order(ActivationKind::ReluCubed) == 3);
    CHECK(network::max_derivative_order(ActivationKind::SmoothTanh) == 3);
}

TEST_CASE("activation names round-trip") {
    for (ActivationKind k :
         {ActivationKind::Relu, ActivationKind::ReluCubed, ActivationKind::SmoothTanh})
        CHECK(network::activation_from_name(network::activation_name(k)) == k);
    CHECK_THROWS_AS((void)network::activation_from_name("sigmoid"), ValidationError);
}

TEST_CASE("initialization is reproducible and stream-separated") {
    const ModelParams a = network::init_params(16, 3, ActivationKind::Relu, 9);
    const ModelParams b = network::init_params(16, 3, ActivationKind::Relu, 9);
    const ModelParams c = network::init_params(16, 3, ActivationKind::Relu, 10);
    CHECK(a.weights.data() == b.weights.data());
    CHECK(a.signs == b.signs);
    CHECK(a.weights.data() != c.weights.data());
}

TEST_CASE("initial weights look standard normal and signs are balanced") {
    const ModelParams p = network::init_params(4096, 4, ActivationKind::Relu, 17);
    const std::vector<double>& w = p.weights.data();
    // Kolmogorov-Smirnov distance against the normal CDF
    std::vector<double> sorted = w;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double cdf = 0.5 * std::erfc(-sorted[i] / std::sqrt(2.0));
        ks = std::max(ks, std::abs(cdf - (i + 1) / n));
        ks = std::max(ks, std::abs(cdf - i / n));
    }
    CHECK(ks < 0.01);
    double sign_sum = 0.0;
    for (double s : p.signs) {
        CHECK(std::abs(s) == 1.0);
        sign_sum += s;
    }
    // 5-sigma binomial window
    CHECK(std::abs(sign_sum) < 5.0 * std::sqrt(static_cast<double>(p.m)));
}

TEST_CASE("forward is positively homogeneous in the weights per activation degree") {
    const std::int64_t d = 3;
    const AugmentedPoint x = seeded_point(d, 5);
    for (auto [kind, degree] : {std::pair{ActivationKind::Relu, 1.0},
                                std::pair{ActivationKind::ReluCubed, 3.0}}) {
        ModelParams p = network::init_params(8, d + 1, kind, 21);
        const double base = network::forward(p, x);
        const double scale = 1.7;
        for (double& w : p.weights.data()) w *= scale;
        CHECK(network::forward(p, x) ==
              doctest::Approx(std::pow(scale, degree) * base).epsilon(1e-12));
    }
}

TEST_CASE("width-1 forward reduces to a single scaled activation") {
    ModelParams p;
    p.m = 1;
    p.d_aug = 3;
    p.weights = numerics::DenseMatrix(1, 3);
    p.weights(0, 0) = 0.5;
    p.weights(0, 1) = -0.25;
    p.weights(0, 2) = 0.125;
    p.signs = {-1.0};
    p.activation = ActivationKind::ReluCubed;
    const AugmentedPoint x{{0.4, 0.2, 1.0}};
    const double z = 0.5 * 0.4 - 0.25 * 0.2 + 0.125;
    CHECK(network::forward(p, x) == doctest::Approx(-std::pow(z, 3.0)).epsilon(1e-15));
}

TEST_CASE("output gradient matches finite differences on smooth configurations") {
    const std::int64_t d = 2, m = 6;
    const AugmentedPoint x = seeded_point(d, 77);
    for (ActivationKind kind : {ActivationKind::ReluCubed, ActivationKind::SmoothTanh}) {
        const ModelParams p = network::init_params(m, d + 1, kind, 31);
        const std::vector<double> grad = network::output_grad(p, x);
        auto f = [&](const std::vector<double>& flat) {
            ModelParams q = p;
            q.weights.data() = flat;
            return network::forward(q, x);
        };
        const std::vector<double> fd = numerics::finite_diff_grad(f, p.weights.data());
        REQUIRE(grad.size() == fd.size());
        for (std::size_t i = 0; i < grad.size(); ++i)
            CHECK(grad[i] == doctest::Approx(fd[i]).epsilon(1e-6));
    }
}

TEST_CASE("parameters survive a JSON round trip") {
    const ModelParams p = network::init_params(5, 4, ActivationKind::SmoothTanh, 13);
    const ModelParams q = network::params_from_json(network::params_to_json(p));
    CHECK(q.m == p.m);
    CHECK(q.d_aug == p.d_aug);
    CHECK(q.activation == p.activation);
    CHECK(q.weights.data() == p.weights.data());
    CHECK(q.signs == p.signs);
}

TEST_CASE("augmented-point validation rejects malformed inputs") {
    CHECK_THROWS_AS(network::validate_augmented(AugmentedPoint{{0.5, 0.9}}), ValidationError);
    CHECK_THROWS_AS(network::validate_augmented(AugmentedPoint{{1.3, 1.0}}), ValidationError);
    CHECK_NOTHROW(network::validate_augmented(AugmentedPoint{{0.5, 1.0}}));
}

TEST_CASE("parameter validation rejects inconsistent shapes") {
    ModelParams p = network::init_params(4, 3, ActivationKind::Relu, 1);
    p.signs.pop_back();
    CHECK_THROWS_AS(network::validate_params(p), ValidationError);
    ModelParams q = network::init_params(4, 3, ActivationKind::Relu, 1);
    q.signs[0] = 0.5;
    CHECK_THROWS_AS(network::validate_params(q), ValidationError);
}
