#include "rollwave/cli.hpp"
#include "rollwave/errors.hpp"
#include "rollwave/evans.hpp"
#include "rollwave/hill.hpp"
#include "rollwave/kdv_limit.hpp"
#include "rollwave/linearize.hpp"
#include "rollwave/profile.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace rollwave;

namespace {

PhysicalParams make_params(double F, double nu, double q, double X) {
    PhysicalParams p;
    p.F = F;
    p.nu = nu;
    p.q = q;
    p.X = X;
    return p;
}

py::dict verdict_dict(const evans::StabilityVerdict& v) {
    py::dict d;
    d["overall"] = std::string(evans::overall_name(v.overall));
    d["reason"] = v.reason;
    d["slope_margin"] = v.slope_margin;
    const std::pair<const char*, const evans::Condition*> conds[] = {
        {"D1", &v.D1}, {"D2", &v.D2}, {"D3", &v.D3}, {"H1", &v.H1}, {"slope", &v.slope}};
    for (const auto& [name, c] : conds) {
        py::dict e;
        e["holds"] = c->holds ? py::cast(*c->holds) : py::none();
        e["detail"] = c->detail;
        d[name] = e;
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Roll-wave profiles and their spectral stability";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def("period_of_k", &kdv::period_of_k, py::arg("k"));
    m.def("k_of_period", &kdv::k_of_period, py::arg("X"), py::arg("tol") = 1e-10);
    m.def("selection_kappa", &kdv::selection_kappa, py::arg("k"));

    py::class_<PhysicalParams>(m, "Params")
        .def(py::init(&make_params), py::arg("F"), py::arg("nu"), py::arg("q"), py::arg("X"))
        .def_readwrite("F", &PhysicalParams::F)
        .def_readwrite("nu", &PhysicalParams::nu)
        .def_readwrite("q", &PhysicalParams::q)
        .def_readwrite("c", &PhysicalParams::c)
        .def_readwrite("X", &PhysicalParams::X);

    py::class_<WaveProfile>(m, "WaveProfile")
        .def_readonly("params", &WaveProfile::params)
        .def_readonly("tau", &WaveProfile::tau)
        .def_readonly("dtau", &WaveProfile::dtau)
        .def_readonly("newton_iterations", &WaveProfile::newton_iterations)
        .def_property_readonly("n", &WaveProfile::n)
        .def_property_readonly("amplitude", &WaveProfile::amplitude)
        .def_property_readonly("u", &WaveProfile::u)
        .def_property_readonly("residual_norm", [](const WaveProfile& w) { return profile::residual_norm(w); })
        .def("to_json", [](const WaveProfile& w) { return profile::to_json(w); })
        .def_static("from_json", &profile::from_json, py::arg("text"));

    m.def(
        "solve_profile",
        [](double F, double nu, double q, double X) {
            py::gil_scoped_release release;
            return profile::solve_from_kdv(make_params(F, nu, q, X));
        },
        py::arg("F"), py::arg("nu"), py::arg("q"), py::arg("X"));
    m.def(
        "continue_profile",
        [](const WaveProfile& from, double X) {
            auto to = from.params;
            to.X = X;
            py::gil_scoped_release release;
            return profile::continue_profile(from, to).back();
        },
        py::arg("profile"), py::arg("X"));

    m.def(
        "hill_spectrum",
        [](const WaveProfile& w, int modes, int xi_points) {
            std::vector<std::pair<double, std::vector<std::complex<double>>>> out;
            {
                py::gil_scoped_release release;
                const auto problem = evans::problem_for(w);
                const auto cloud = hill::spectrum(problem, modes, hill::xi_grid(problem.period, xi_points));
                for (const auto& s : cloud.spectra) out.emplace_back(s.xi, s.eigenvalues);
            }
            return out;
        },
        py::arg("profile"), py::arg("modes") = 101, py::arg("xi_points") = 21);

    m.def(
        "verdict",
        [](const WaveProfile& w, int modes, int xi_points, bool use_evans) {
            evans::VerdictConfig cfg;
            cfg.modes = modes;
            cfg.xi_points = xi_points;
            cfg.use_evans = use_evans;
            evans::StabilityVerdict v;
            {
                py::gil_scoped_release release;
                v = evans::verdict(w, cfg);
            }
            return verdict_dict(v);
        },
        py::arg("profile"), py::arg("modes") = 101, py::arg("xi_points") = 21, py::arg("use_evans") = true);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
