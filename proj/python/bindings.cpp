// Python bindings: sampling, filter construction, refinement and the
// sample-covariance estimators, with fields exposed as numpy arrays.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <stdexcept>

#include "grf/covariance.hpp"
#include "grf/multiscale.hpp"
#include "grf/oracle.hpp"
#include "grf/sampler.hpp"
#include "grf/spectral.hpp"

namespace py = pybind11;
using namespace grf;

namespace {

Kernel1D make_kernel(const std::string& kind, double sigma2, double alpha,
                     const std::optional<std::vector<double>>& seq) {
    if (kind == "exp") return Kernel1D::exponential(sigma2, alpha);
    if (kind == "gauss") return Kernel1D::gaussian(sigma2, alpha);
    if (kind == "custom") {
        if (!seq) throw std::invalid_argument("custom kernel requires seq");
        return Kernel1D::custom(*seq);
    }
    throw std::invalid_argument("kernel kind must be 'exp', 'gauss' or 'custom'");
}

CovarianceModel make_model(const std::vector<std::string>& kinds,
                           const std::vector<double>& sigma2, const std::vector<double>& alpha,
                           const std::vector<double>& T) {
    if (kinds.size() != T.size() || alpha.size() != T.size() ||
        (!sigma2.empty() && sigma2.size() != T.size()))
        throw std::invalid_argument("kinds, alpha, sigma2 and T must have equal length");
    CovarianceModel m;
    for (std::size_t j = 0; j < T.size(); ++j)
        m.kernels.push_back(
            make_kernel(kinds[j], sigma2.empty() ? 1.0 : sigma2[j], alpha[j], std::nullopt));
    m.T = T;
    m.validate();
    return m;
}

py::array_t<double> grid_to_array(const Grid& g) {
    std::vector<py::ssize_t> shape(g.shape.begin(), g.shape.end());
    py::array_t<double> out(shape);
    std::memcpy(out.mutable_data(), g.data.data(), g.data.size() * sizeof(double));
    return out;
}

py::array_t<double> vector_to_array(const std::vector<double>& v) {
    std::vector<py::ssize_t> shape = {py::ssize_t(v.size())};
    py::array_t<double> out(shape);
    std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
    return out;
}

Grid array_to_grid(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    Grid g;
    g.shape.assign(a.shape(), a.shape() + a.ndim());
    g.data.assign(a.data(), a.data() + a.size());
    return g;
}

oracle::ProfileDirection direction_from_string(const std::string& d) {
    if (d == "x") return oracle::ProfileDirection::Axis0;
    if (d == "y") return oracle::ProfileDirection::Axis1;
    if (d == "z") return oracle::ProfileDirection::Axis2;
    if (d == "diag") return oracle::ProfileDirection::Diagonal;
    throw std::invalid_argument("direction must be 'x', 'y', 'z' or 'diag'");
}

}  // namespace

PYBIND11_MODULE(_grfields, m) {
    m.doc() = "Gaussian stationary random fields with decoupled covariances";

    py::class_<RationalFilter1D>(m, "RationalFilter1D")
        .def_readonly("b", &RationalFilter1D::b)
        .def_readonly("a", &RationalFilter1D::a)
        .def_property_readonly("ar_order", &RationalFilter1D::ar_order)
        .def_property_readonly("ma_order", &RationalFilter1D::ma_order)
        .def("__repr__", [](const RationalFilter1D& f) {
            return "<RationalFilter1D ar_order=" + std::to_string(f.ar_order()) +
                   " ma_order=" + std::to_string(f.ma_order()) + ">";
        });

    py::class_<MESolveReport>(m, "MESolveReport")
        .def_readonly("iterations", &MESolveReport::iterations)
        .def_readonly("final_gradient_norm", &MESolveReport::final_gradient_norm)
        .def_readonly("moment_residuals", &MESolveReport::moment_residuals)
        .def_readonly("converged", &MESolveReport::converged);

    py::class_<RefinementState>(m, "RefinementState")
        .def_property_readonly("field",
                               [](const RefinementState& s) { return grid_to_array(s.field.grid); })
        .def_property_readonly("T", [](const RefinementState& s) { return s.field.T; })
        .def_property_readonly("scale_level",
                               [](const RefinementState& s) { return s.field.scale_level; })
        .def_property_readonly("seed", [](const RefinementState& s) { return s.field.seed; });

    m.def(
        "build_filter",
        [](const std::string& kind, double sigma2, double alpha, double T,
           const std::vector<double>& b, std::optional<std::size_t> order,
           const std::optional<std::vector<double>>& seq) {
            BuildFilterOptions opts;
            opts.b = b;
            opts.m = order;
            auto res = build_filter(make_kernel(kind, sigma2, alpha, seq), T, opts);
            return py::make_tuple(res.filter, res.report);
        },
        py::arg("kind"), py::arg("sigma2") = 1.0, py::arg("alpha") = 1.0, py::arg("T") = 1.0,
        py::arg("b") = std::vector<double>{1.0}, py::arg("m") = std::nullopt,
        py::arg("seq") = std::nullopt,
        "Construct one dimension's shaping filter; returns (filter, report).");

    m.def(
        "generate",
        [](const std::vector<std::string>& kinds, const std::vector<double>& alpha,
           const std::vector<double>& T, const std::vector<std::size_t>& N, std::uint64_t seed,
           double beta, const std::vector<double>& sigma2, const std::vector<double>& b) {
            auto model = make_model(kinds, sigma2, alpha, T);
            BuildFilterOptions opts;
            opts.b = b;
            auto gen = generate(model, N, seed, beta, opts);
            auto state = RefinementState::from_generate(std::move(gen), model);
            auto field = grid_to_array(state.field.grid);
            return py::make_tuple(field, state);
        },
        py::arg("kinds"), py::arg("alpha"), py::arg("T"), py::arg("N"), py::arg("seed") = 0,
        py::arg("beta") = 0.1, py::arg("sigma2") = std::vector<double>{},
        py::arg("b") = std::vector<double>{1.0},
        "Sample a realization; returns (field, state) with the state ready for refine().");

    m.def(
        "refine",
        [](const RefinementState& state, std::uint64_t seed) {
            auto res = refine(state, seed);
            return py::make_tuple(grid_to_array(res.field.grid), res.state);
        },
        py::arg("state"), py::arg("seed") = 0,
        "One conditional refinement level; returns (fine_field, fine_state).");

    m.def(
        "sample_covariance",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& field,
           const std::vector<std::size_t>& k) {
            return oracle::sample_covariance(array_to_grid(field), k);
        },
        py::arg("field"), py::arg("k"),
        "Biased spatial-average sample covariance at an integer lag vector.");

    m.def(
        "covariance_profile",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& field,
           const std::string& direction, std::size_t max_lag) {
            auto p = oracle::covariance_profile(array_to_grid(field),
                                                direction_from_string(direction), max_lag);
            return vector_to_array(p);
        },
        py::arg("field"), py::arg("direction"), py::arg("max_lag"),
        "Sample covariance at lags 0..max_lag along 'x', 'y', 'z' or 'diag'.");

    m.def(
        "target_profile",
        [](const std::vector<std::string>& kinds, const std::vector<double>& alpha,
           const std::vector<double>& T, const std::string& direction, std::size_t max_lag,
           const std::vector<double>& sigma2) {
            auto p = oracle::target_profile(make_model(kinds, sigma2, alpha, T),
                                            direction_from_string(direction), max_lag);
            return vector_to_array(p);
        },
        py::arg("kinds"), py::arg("alpha"), py::arg("T"), py::arg("direction"),
        py::arg("max_lag"), py::arg("sigma2") = std::vector<double>{},
        "Model covariance at the same lags as covariance_profile.");

    py::register_exception<MENonConvergence>(m, "MENonConvergence", PyExc_RuntimeError);
}
