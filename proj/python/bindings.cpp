#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "specsel/errors.hpp"
#include "specsel/pipeline.hpp"

namespace py = pybind11;
using namespace specsel;

namespace {

SpectraSet make_set(Eigen::VectorXd wavelengths, Eigen::MatrixXd spectra, std::optional<Eigen::VectorXd> target) {
    return SpectraSet(std::move(wavelengths), std::move(spectra), std::move(target));
}

py::dict trace_dict(const SelectionTrace& t) {
    py::list steps;
    for (const SelectionStep& s : t.steps) {
        py::dict d;
        d["phase"] = s.phase == Phase::forward ? "forward" : "backward";
        d["candidate"] = s.candidate;
        d["subset"] = s.subset_after;
        d["mi"] = s.mi_after;
        steps.append(d);
    }
    py::dict out;
    out["steps"] = steps;
    out["subset"] = t.final_subset;
    out["mi"] = t.final_mi;
    out["forward_evaluations"] = t.forward_evaluations;
    out["backward_evaluations"] = t.backward_evaluations;
    return out;
}

std::vector<std::pair<double, double>> as_pairs(const std::vector<Interval>& v) {
    std::vector<std::pair<double, double>> out;
    for (const Interval& i : v) out.emplace_back(i.lower, i.upper);
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spectral variable selection: B-spline compression, MI selection and regression models";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", base);
    py::register_exception<ValidationError>(m, "ValidationError", base);
    py::register_exception<PreconditionError>(m, "PreconditionError", base);
    py::register_exception<DomainError>(m, "DomainError", base);
    py::register_exception<SingularDesignError>(m, "SingularDesignError", base);
    py::register_exception<IllPosedLooError>(m, "IllPosedLooError", base);
    py::register_exception<ConfigError>(m, "ConfigError", base);
    py::register_exception<StageError>(m, "StageError", base);

    py::class_<BsplineBasis>(m, "BsplineBasis")
        .def(py::init<double, double, int, int>(), py::arg("w_min"), py::arg("w_max"), py::arg("intervals"),
             py::arg("order"))
        .def_property_readonly("order", &BsplineBasis::order)
        .def_property_readonly("intervals", &BsplineBasis::intervals)
        .def_property_readonly("n_functions", &BsplineBasis::n_functions)
        .def_property_readonly("knots", &BsplineBasis::knots)
        .def("evaluate", &BsplineBasis::evaluate, py::arg("w"))
        .def("greville", &BsplineBasis::greville);

    py::class_<SplineFitter>(m, "SplineFitter")
        .def(py::init<BsplineBasis, Eigen::VectorXd>(), py::arg("basis"), py::arg("wavelengths"))
        .def("fit", &SplineFitter::fit, py::arg("samples"), "Rows are spectra; returns one coefficient row each.")
        .def("reconstruct", &SplineFitter::reconstruct, py::arg("coefficients"))
        .def("loo_errors", &SplineFitter::loo_errors, py::arg("samples"))
        .def_property_readonly("leverages", &SplineFitter::leverages)
        .def("projection", &SplineFitter::projection);

    m.def(
        "select_basis_size",
        [](const Eigen::VectorXd& wavelengths, const Eigen::MatrixXd& spectra, int n_min, int n_max,
           std::vector<int> orders, const std::string& strategy) {
            const SpectraSet set = make_set(wavelengths, spectra, std::nullopt);
            SearchStrategy s = SearchStrategy::exhaustive;
            if (strategy == "coarse_to_fine") s = SearchStrategy::coarse_to_fine;
            else if (strategy != "exhaustive") throw ConfigError("unknown strategy: " + strategy);
            const BasisSelection b = select_basis_size(set, {n_min, n_max}, orders, s);
            py::list curve;
            for (const LooPoint& p : b.curve) curve.append(py::make_tuple(p.order, p.n_functions, p.loo));
            py::dict out;
            out["n_functions"] = b.n_functions;
            out["order"] = b.order;
            out["curve"] = curve;
            return out;
        },
        py::arg("wavelengths"), py::arg("spectra"), py::arg("n_min"), py::arg("n_max"),
        py::arg("orders") = std::vector<int>{4}, py::arg("strategy") = "exhaustive");

    m.def(
        "projection_matrix",
        [](const BsplineBasis& basis, const Eigen::VectorXd& wavelengths) {
            return projection_matrix(basis, wavelengths).entries;
        },
        py::arg("basis"), py::arg("wavelengths"), "n x N matrix mapping a spectrum to its coefficients.");

    m.def(
        "wavelength_range",
        [](const BsplineBasis& basis, const Eigen::VectorXd& wavelengths, std::size_t i, double epsilon) {
            const WavelengthRange r = wavelength_range(projection_matrix(basis, wavelengths), i, epsilon);
            return std::make_pair(r.lower, r.upper);
        },
        py::arg("basis"), py::arg("wavelengths"), py::arg("index"), py::arg("epsilon") = 0.1);

    m.def(
        "merge_ranges",
        [](const std::vector<std::pair<double, double>>& ranges) {
            std::vector<Interval> v;
            for (const auto& [lo, hi] : ranges) v.push_back({lo, hi});
            return as_pairs(merge_ranges(std::span<const Interval>(v)));
        },
        py::arg("ranges"));

    m.def(
        "mutual_information",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k, std::uint64_t seed) {
            MiEstimatorConfig c;
            c.k = k;
            c.seed = seed;
            return mutual_information(JointSample{x, y}, c).nats;
        },
        py::arg("x"), py::arg("y"), py::arg("k") = 6, py::arg("seed") = 0, "KSG estimate in nats.");

    m.def(
        "forward_backward",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k, std::uint64_t seed,
           std::optional<std::size_t> max_size, double min_delta) {
            MiEstimatorConfig c;
            c.k = k;
            c.seed = seed;
            return trace_dict(forward_backward(x, y, c, {max_size, min_delta}));
        },
        py::arg("x"), py::arg("y"), py::arg("k") = 6, py::arg("seed") = 0, py::arg("max_size") = py::none(),
        py::arg("min_delta") = 0.0);

    py::class_<RbfnModel>(m, "RbfnModel")
        .def_readonly("centers", &RbfnModel::centers)
        .def_readonly("widths", &RbfnModel::widths)
        .def_readonly("weights", &RbfnModel::weights)
        .def_readonly("width_scale", &RbfnModel::width_scale)
        .def("predict", [](const RbfnModel& r, const Eigen::MatrixXd& x) { return predict_rbfn(r, x); });
    m.def("fit_rbfn", &fit_rbfn, py::arg("x"), py::arg("y"), py::arg("neurons"), py::arg("width_scale") = 1.0,
          py::arg("seed") = 0);

    py::class_<LinearModel>(m, "LinearModel")
        .def_property_readonly("coefficients", &LinearModel::raw_coefficients)
        .def_property_readonly("intercept", &LinearModel::raw_intercept)
        .def("predict", &LinearModel::predict);
    m.def("fit_linear", &fit_linear, py::arg("x"), py::arg("y"));

    py::class_<LatentModel>(m, "LatentModel")
        .def_readonly("n_components", &LatentModel::n_components)
        .def_readonly("linear", &LatentModel::linear)
        .def("predict", &LatentModel::predict);
    m.def(
        "fit_latent",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::string& kind, int components) {
            if (kind != "pcr" && kind != "plsr") throw ConfigError("kind must be pcr or plsr");
            return fit_latent(x, y, kind == "pcr" ? LatentKind::pcr : LatentKind::plsr, components);
        },
        py::arg("x"), py::arg("y"), py::arg("kind"), py::arg("n_components"));

    m.def("nmse", &nmse, py::arg("y_true"), py::arg("y_pred"), py::arg("variance"));

    m.def(
        "make_synthetic",
        [](std::size_t n_wavelengths, std::size_t n_spectra, const std::string& response, std::uint64_t seed) {
            SyntheticOptions o;
            o.n_wavelengths = n_wavelengths;
            o.n_spectra = n_spectra;
            if (response == "linear") o.response = SyntheticResponse::linear;
            else if (response != "nonlinear") throw ConfigError("response must be linear or nonlinear");
            o.seed = seed;
            const SyntheticData d = make_synthetic(o);
            py::dict out;
            out["wavelengths"] = d.set.wavelengths();
            out["spectra"] = d.set.responses();
            out["target"] = d.set.require_target();
            out["bands"] = as_pairs(d.bands);
            return out;
        },
        py::arg("n_wavelengths") = 300, py::arg("n_spectra") = 150, py::arg("response") = "nonlinear",
        py::arg("seed") = 0);

    m.def(
        "_run_pipeline_config",
        [](const std::filesystem::path& path) {
            const PipelineConfig c = load_config(path);
            py::gil_scoped_release release;
            return to_json(run_pipeline(c)).dump();
        },
        py::arg("path"));
    m.def(
        "_run_pipeline_arrays",
        [](const std::string& config_text, const Eigen::VectorXd& wavelengths, const Eigen::MatrixXd& spectra,
           const Eigen::VectorXd& target) {
            std::istringstream in("data = in-memory\n" + config_text);
            const PipelineConfig c = parse_config(in);
            const SpectraSet set = make_set(wavelengths, spectra, target);
            py::gil_scoped_release release;
            return to_json(run_pipeline(c, set)).dump();
        },
        py::arg("config_text"), py::arg("wavelengths"), py::arg("spectra"), py::arg("target"));
}
