#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "gramflow/activation.hpp"
#include "gramflow/errors.hpp"
#include "gramflow/network.hpp"
#include "gramflow/pinn.hpp"
#include "gramflow/regression.hpp"
#include "gramflow/runner.hpp"
#include "gramflow/theory.hpp"
#include "gramflow/trace.hpp"

namespace py = pybind11;
using namespace gramflow;

namespace {

// the python layer decodes these JSON payloads into plain dicts

std::string regression_dataset_json(std::int64_t n, std::int64_t d, std::uint64_t seed) {
    return regression::dataset_to_json(regression::sample_dataset(n, d, seed));
}

std::string regression_gram_json(std::int64_t n, std::int64_t d, std::uint64_t seed) {
    return gram_report_to_json(
        regression::gram_inf_relu(regression::sample_dataset(n, d, seed)));
}

std::string pinn_dataset_json(const std::string& instance, std::int64_t d, std::int64_t n1,
                              std::int64_t n2, std::uint64_t seed) {
    return pinn::dataset_to_json(
        pinn::sample_dataset(pinn::make_instance(instance, d), n1, n2, seed));
}

std::string pinn_gram_json(const std::string& instance, std::int64_t d, std::int64_t n1,
                           std::int64_t n2, const std::string& activation, std::int64_t n_mc,
                           std::uint64_t seed) {
    const pinn::PinnDataset data =
        pinn::sample_dataset(pinn::make_instance(instance, d), n1, n2, seed);
    return gram_report_to_json(
        pinn::gram_inf_mc(data, network::activation_from_name(activation), n_mc, seed));
}

std::string train_regression_json(std::int64_t n, std::int64_t d, std::int64_t m,
                                  std::uint64_t seed, std::int64_t iters,
                                  std::optional<double> eta, bool diag_gram) {
    const regression::RegressionDataset data = regression::sample_dataset(n, d, seed);
    const network::ModelParams params0 =
        network::init_params(m, d + 1, network::ActivationKind::Relu, seed);
    regression::GdOptions opt;
    opt.iters = iters;
    opt.eta_auto = !eta.has_value();
    opt.eta = eta.value_or(0.0);
    opt.diagnostics.gram = diag_gram;
    return trace_to_json(regression::train_gd(params0, data, opt));
}

std::string train_pinn_json(const std::string& instance, std::int64_t d, std::int64_t n1,
                            std::int64_t n2, const std::string& activation, std::int64_t m,
                            std::uint64_t seed, const std::string& optimizer, std::int64_t iters,
                            std::optional<double> eta, std::int64_t n_mc, bool diag_gram) {
    const pinn::PinnDataset data =
        pinn::sample_dataset(pinn::make_instance(instance, d), n1, n2, seed);
    const network::ModelParams params0 =
        network::init_params(m, d + 2, network::activation_from_name(activation), seed);
    pinn::PinnTrainOptions opt;
    if (optimizer == "gd")
        opt.optimizer = pinn::Optimizer::Gd;
    else if (optimizer == "ngd")
        opt.optimizer = pinn::Optimizer::Ngd;
    else
        throw ValidationError("optimizer must be gd or ngd");
    opt.iters = iters;
    opt.eta_auto = !eta.has_value();
    opt.eta = eta.value_or(0.0);
    opt.diagnostics.gram = diag_gram;
    opt.n_mc = n_mc;
    opt.mc_seed = seed;
    return trace_to_json(pinn::train(params0, data, opt));
}

std::string run_config_text(const std::string& text) {
    const runner::RunConfig cfg = runner::parse_config_text(text);
    return runner::manifest_to_json(runner::run(cfg));
}

}  // namespace

PYBIND11_MODULE(_gramflow, mod) {
    mod.doc() = "two-layer network training dynamics through the lens of the kernel matrix";
    mod.attr("__version__") = runner::kArtifactVersion;

    mod.def("activation_eval",
            [](const std::string& name, int order, double z) {
                return network::activation_eval(network::activation_from_name(name), order, z);
            },
            py::arg("name"), py::arg("order"), py::arg("z"),
            "activation value or derivative (order 0..3) at z");

    mod.def("regression_dataset_json", &regression_dataset_json, py::arg("n"), py::arg("d"),
            py::arg("seed"), "unit-ball regression sample as JSON");
    mod.def("regression_gram_json", &regression_gram_json, py::arg("n"), py::arg("d"),
            py::arg("seed"), "closed-form limiting kernel report as JSON");
    mod.def("pinn_dataset_json", &pinn_dataset_json, py::arg("instance"), py::arg("d"),
            py::arg("n1"), py::arg("n2"), py::arg("seed"),
            "heat-equation collocation sample as JSON");
    mod.def("pinn_gram_json", &pinn_gram_json, py::arg("instance"), py::arg("d"), py::arg("n1"),
            py::arg("n2"), py::arg("activation"), py::arg("n_mc"), py::arg("seed"),
            "Monte Carlo limiting kernel report as JSON");
    mod.def("train_regression_json", &train_regression_json, py::arg("n"), py::arg("d"),
            py::arg("m"), py::arg("seed"), py::arg("iters") = 500,
            py::arg("eta") = std::nullopt, py::arg("diag_gram") = false,
            "full-batch gradient descent trace as JSON");
    mod.def("train_pinn_json", &train_pinn_json, py::arg("instance"), py::arg("d"), py::arg("n1"),
            py::arg("n2"), py::arg("activation"), py::arg("m"), py::arg("seed"),
            py::arg("optimizer") = "gd", py::arg("iters") = 500, py::arg("eta") = std::nullopt,
            py::arg("n_mc") = 50000, py::arg("diag_gram") = false,
            "PDE-residual training trace as JSON");
    mod.def("run_config", &run_config_text, py::arg("config_text"),
            "execute a full experiment config; returns the manifest as JSON");

    py::register_exception<ValidationError>(mod, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(mod, "NumericalError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
}
