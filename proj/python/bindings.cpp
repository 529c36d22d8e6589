#include "rotstar/cli_io.hpp"
#include "rotstar/diagnostics.hpp"
#include "rotstar/errors.hpp"
#include "rotstar/iteration.hpp"
#include "rotstar/lane_emden.hpp"
#include "rotstar/linearized.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace rotstar;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const AxiField& f)
{
    const DomainSpec& d = f.domain();
    Array a({d.Nu, d.Ntheta});
    std::copy(f.values().begin(), f.values().end(), a.mutable_data());
    return a;
}

AxiField from_numpy(const DomainSpec& d, const Array& a)
{
    if (a.ndim() != 2 || a.shape(0) != d.Nu || a.shape(1) != d.Ntheta)
        throw DomainError("array shape must be (Nu, Ntheta) of the grid");
    AxiField f(d);
    std::copy(a.data(), a.data() + a.size(), f.values().begin());
    return f;
}

ProfileSpec spec_of(const std::string& name, const std::map<std::string, double>& params,
                    const std::string& file)
{
    return ProfileSpec{name, params, file};
}

py::dict residuals_dict(const ResidualReport& r)
{
    py::dict d;
    d["W_sup"] = r.W_sup;
    d["W_l2"] = r.W_l2;
    d["curl_sup"] = r.curl_sup;
    d["mass_err"] = r.mass_err;
    d["pw_cross_sup"] = r.pw_cross_sup;
    d["tangential_sup"] = r.tangential_sup;
    return d;
}

py::list history_list(const IterationHistory& h)
{
    py::list out;
    for (const auto& s : h.steps) {
        py::dict d;
        d["step"] = s.step;
        d["dV_sup"] = s.dV_sup;
        d["dalpha"] = s.dalpha;
        d["c1_diff"] = s.c1_diff;
        d["ratio"] = s.ratio;
        d["mass_err"] = s.mass_err;
        d["W_sup"] = s.W_sup;
        d["high_norm"] = s.high_norm;
        out.append(d);
    }
    return out;
}

/// One configuration: its base state and profiles, kept together
/// so that Python callers cannot pair a state with the wrong grid.
struct Star {
    RunConfig config;
    std::shared_ptr<const BaseState> base;
    Profiles profiles;
};

Star make_star(const RunConfig& cfg)
{
    validate_config(cfg);
    Star s{cfg, std::make_shared<const BaseState>(build_base(PhysicalParams::make(cfg.gamma), cfg.grid)), {}};
    s.profiles = build_profiles(cfg, s.base->domain);
    return s;
}

py::dict solve(const Star& s, double kappa, double mu)
{
    const auto p = PhysicalParams::make(s.config.gamma, kappa, mu);
    NewtonOptions o;
    o.tol = s.config.newton_tol;
    o.max_steps = s.config.max_steps;
    o.F.trace_tol = s.config.trace_tol;
    NewtonResult r;
    {
        py::gil_scoped_release nogil;
        r = newton_solve(*s.base, p, s.profiles, o);
    }
    const auto rep = momentum_residual(r.state.V, r.state.S, r.state.alpha, p, s.profiles, s.base->M);
    py::dict d;
    d["V"] = to_numpy(r.state.V);
    d["S"] = to_numpy(r.state.S);
    d["alpha"] = r.state.alpha;
    d["mass"] = r.mass;
    d["steps"] = static_cast<int>(r.history.steps.size());
    d["history"] = history_list(r.history);
    d["fixed_point_residual"] = r.history.fixed_point_residual;
    d["residuals"] = residuals_dict(rep);
    return d;
}

py::tuple cli(const std::vector<std::string>& args)
{
    std::vector<std::string> all{"rotstar"};
    all.insert(all.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : all)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Rotating stars with variable entropy: Lane-Emden base states, Newton solves, diagnostics";
    m.attr("__version__") = code_version();

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NonConvergenceError>(m, "NonConvergenceError", PyExc_RuntimeError);
    py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_RuntimeError);

    py::class_<LaneEmdenSolution>(m, "LaneEmden")
        .def_readonly("q", &LaneEmdenSolution::q)
        .def_readonly("R0", &LaneEmdenSolution::R0)
        .def_readonly("M", &LaneEmdenSolution::M)
        .def_readonly("alpha0", &LaneEmdenSolution::alpha0)
        .def("__call__", [](const LaneEmdenSolution& s, double u) { return eval_V0(s, u); }, py::arg("u"),
             "(V0(u), V0'(u))");
    m.def("solve_lane_emden", [](double q) { return solve_lane_emden(q); }, py::arg("q"),
          "Radial base state for V0(0) = 1.");
    m.def("mass_derivative_identity", &mass_derivative_identity, py::arg("base"),
          "(q int (V0)_+^(q-1) U dx, (3 - q)/(q - 1) M)");

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init([](int Nu, int Ntheta, int Lmax, double R_over_R0) {
                 return GridSpec{Nu, Ntheta, Lmax, R_over_R0};
             }),
             py::arg("Nu") = 128, py::arg("Ntheta") = 64, py::arg("Lmax") = 16, py::arg("R_over_R0") = 1.5)
        .def_readwrite("Nu", &GridSpec::Nu)
        .def_readwrite("Ntheta", &GridSpec::Ntheta)
        .def_readwrite("Lmax", &GridSpec::Lmax)
        .def_readwrite("R_over_R0", &GridSpec::R_over_R0);

    py::class_<ProfileSpec>(m, "ProfileSpec")
        .def(py::init(&spec_of), py::arg("name"), py::arg("params") = std::map<std::string, double>{},
             py::arg("file") = "")
        .def_readwrite("name", &ProfileSpec::name)
        .def_readwrite("params", &ProfileSpec::params)
        .def_readwrite("file", &ProfileSpec::file);

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("gamma", &RunConfig::gamma)
        .def_readwrite("kappa", &RunConfig::kappa)
        .def_readwrite("mu", &RunConfig::mu)
        .def_readwrite("omega2", &RunConfig::omega2)
        .def_readwrite("s0", &RunConfig::s0)
        .def_readwrite("grid", &RunConfig::grid)
        .def_readwrite("newton_tol", &RunConfig::newton_tol)
        .def_readwrite("trace_tol", &RunConfig::trace_tol)
        .def_readwrite("max_steps", &RunConfig::max_steps)
        .def_readwrite("output_dir", &RunConfig::output_dir)
        .def("__eq__", [](const RunConfig& a, const RunConfig& b) { return a == b; });
    m.def("parse_config", &parse_config, py::arg("text"));
    m.def("serialize_config", &serialize_config, py::arg("config"));
    m.def("validate_config", &validate_config, py::arg("config"));

    py::class_<Star>(m, "Star", "Base state, frozen linearization and profiles for one configuration.")
        .def(py::init(&make_star), py::arg("config"))
        .def_property_readonly("config", [](const Star& s) { return s.config; })
        .def_property_readonly("M", [](const Star& s) { return s.base->M; })
        .def_property_readonly("R0", [](const Star& s) { return s.base->domain.R0; })
        .def_property_readonly("R", [](const Star& s) { return s.base->domain.R; })
        .def_property_readonly("alpha0", [](const Star& s) { return s.base->alpha0; })
        .def_property_readonly("V0", [](const Star& s) { return to_numpy(s.base->V0); })
        .def_property_readonly("u", [](const Star& s) {
            std::vector<double> u;
            for (int i = 0; i < s.base->domain.Nu; ++i)
                u.push_back(s.base->domain.u(i));
            return u;
        })
        .def_property_readonly("theta", [](const Star& s) {
            std::vector<double> t;
            for (int j = 0; j < s.base->domain.Ntheta; ++j)
                t.push_back(s.base->domain.theta(j));
            return t;
        })
        .def("solve", &solve, py::arg("kappa"), py::arg("mu"),
             "Frozen-Jacobian Newton solve; returns V, S, alpha, mass, steps, history, residuals.")
        .def(
            "residuals",
            [](const Star& s, const Array& V, const Array& S, double alpha, double kappa, double mu) {
                const DomainSpec& d = s.base->domain;
                const auto p = PhysicalParams::make(s.config.gamma, kappa, mu);
                return residuals_dict(
                    momentum_residual(from_numpy(d, V), from_numpy(d, S), alpha, p, s.profiles, s.base->M));
            },
            py::arg("V"), py::arg("S"), py::arg("alpha"), py::arg("kappa"), py::arg("mu"))
        .def(
            "poincare_wavre_defect",
            [](const Star& s, const Array& V, const Array& S, double kappa, double mu) {
                const DomainSpec& d = s.base->domain;
                const auto p = PhysicalParams::make(s.config.gamma, kappa, mu);
                return poincare_wavre(from_numpy(d, V), from_numpy(d, S), p, s.profiles).defect;
            },
            py::arg("V"), py::arg("S"), py::arg("kappa"), py::arg("mu"))
        .def(
            "holder_norm",
            [](const Star& s, const Array& f, double k, double beta, bool bracket) {
                return weighted_holder_norm(from_numpy(s.base->domain, f), k, beta,
                                            bracket ? HolderVariant::Bracket : HolderVariant::Parenthesis);
            },
            py::arg("field"), py::arg("k") = 0.0, py::arg("beta") = 0.5, py::arg("bracket") = false)
        .def("sigma_min", [](const Star& s) { return lambda_sigma_min(s.base->lambda).per_block; },
             "Smallest singular value of each l block of the frozen linearization.");

    m.def("run_cli", &cli, py::arg("args"), "Run the command-line driver; returns (exit_code, stdout, stderr).");
    m.def("set_warnings_enabled", &set_warnings_enabled, py::arg("enabled"));
}
