// Python bindings: the main operations of the synthesis/verification
// pipeline, using plain lists/dicts at the boundary.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "ionshuttle/artifacts.hpp"
#include "ionshuttle/coulomb.hpp"
#include "ionshuttle/errors.hpp"
#include "ionshuttle/model.hpp"
#include "ionshuttle/numkit.hpp"
#include "ionshuttle/protocols.hpp"
#include "ionshuttle/units.hpp"

namespace py = pybind11;
using namespace ionshuttle;
using numkit::Mat;
using numkit::Vec;

namespace {

using PyMat = std::vector<std::vector<double>>;

Mat mat_from_py(const PyMat& rows) {
    if (rows.empty()) throw validation_error("matrix must be non-empty");
    Mat m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw validation_error("matrix rows must have equal length");
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

PyMat mat_to_py(const Mat& m) {
    PyMat rows(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
    return rows;
}

protocols::SeparationSpec spec_from_kwargs(double omega_r, double kappa,
                                           double final_separation, double transverse,
                                           double duration, std::size_t steps, int dims,
                                           bool fock, int fock_cutoff, int fock_nodes) {
    protocols::SeparationSpec spec;
    spec.omega_t = 1.0;
    spec.omega_r = omega_r;
    spec.ion = {1.0, 1.0};
    spec.kappa = kappa;
    spec.final_separation = final_separation;
    spec.transverse = transverse;
    spec.duration = duration;
    spec.steps = steps;
    spec.spatial_dims = dims;
    spec.fock_enabled = fock;
    spec.fock_cutoff = fock_cutoff;
    spec.fock_nodes = fock_nodes;
    return spec;
}

py::dict result_to_dict(const protocols::ProtocolResult& result) {
    py::dict out;
    out["fidelity"] = result.fidelity;
    py::dict pops;
    for (const auto& [tuple, p] : result.fock.populations) {
        std::string key;
        for (std::size_t i = 0; i < tuple.size(); ++i) {
            key += std::to_string(tuple[i]);
            if (i + 1 < tuple.size()) key += ',';
        }
        pops[py::str(key)] = p;
    }
    out["populations"] = pops;
    out["fock_total"] = result.fock.total;
    py::dict summary;
    summary["max_purity_drift"] = result.summary.max_purity_drift;
    summary["i_drift_rel"] = result.summary.i_drift_rel;
    summary["max_invariant_residual"] = result.summary.max_gamma_residual;
    summary["max_q_rel"] = result.summary.max_q_rel;
    summary["max_mean_error"] = result.summary.max_mean_error;
    summary["boundary_error_0"] = result.summary.boundary_error_0;
    summary["boundary_error_T"] = result.summary.boundary_error_T;
    summary["min_uncertainty_eig"] = result.summary.min_uncertainty_eig;
    out["summary"] = summary;
    out["final_mean"] = result.trace.states.back().z;
    out["final_covariance"] = mat_to_py(result.trace.states.back().sigma);
    out["target_covariance"] = mat_to_py(result.target_sigma);
    return out;
}

}  // namespace

PYBIND11_MODULE(_ionshuttle, m) {
    m.doc() = "Invariant-based trap synthesis and Gaussian verification for two-ion "
              "shuttling protocols";

    py::register_exception<validation_error>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<numerical_error>(m, "NumericalError", PyExc_RuntimeError);

    m.def("polynomial_p", &protocols::polynomial_p, py::arg("tau"),
          "Quintic timing polynomial 10 t^3 - 15 t^4 + 6 t^5");

    m.def(
        "spd_power",
        [](const PyMat& m_in, double exponent) {
            return mat_to_py(numkit::spd_power(mat_from_py(m_in), exponent));
        },
        py::arg("matrix"), py::arg("exponent"),
        "Fractional power of a symmetric positive-definite matrix");

    m.def(
        "solve_anticommutator",
        [](const PyMat& a, const PyMat& c) {
            return mat_to_py(numkit::solve_anticommutator(mat_from_py(a), mat_from_py(c)));
        },
        py::arg("a"), py::arg("c"), "Solve X A + A X = C for symmetric positive-definite A");

    m.def(
        "interaction_matrix",
        [](const std::vector<double>& r, double kappa) {
            return mat_to_py(coulomb::interaction_matrix(r, kappa));
        },
        py::arg("separation"), py::arg("kappa"),
        "Coulomb coupling matrix D(r) = kappa (1/|r|^3 - 3 r r^T/|r|^5)");

    m.def(
        "equilibrium_positions",
        [](const PyMat& m0, double kappa) {
            const auto [x1, x2] =
                coulomb::equilibrium_positions(mat_from_py(m0), {1.0, 1.0}, {1.0, 1.0}, kappa);
            return py::make_tuple(x1, x2);
        },
        py::arg("curvature"), py::arg("kappa"),
        "Classical equilibrium of two ions in a shared origin-centred well");

    m.def(
        "gauss_hermite",
        [](int n) {
            const auto gh = model::gauss_hermite(n);
            return py::make_tuple(gh.nodes, gh.weights);
        },
        py::arg("n"), "Gauss-Hermite nodes and weights for weight exp(-z^2)");

    py::class_<units::UnitSystem>(m, "UnitSystem")
        .def(py::init<double, double>(), py::arg("ref_mass_kg"), py::arg("ref_omega_rad_s"))
        .def_property_readonly("length_m", &units::UnitSystem::length_m)
        .def("kappa", &units::UnitSystem::kappa, py::arg("charge1") = 1.0,
             py::arg("charge2") = 1.0)
        .def("position_to_si", &units::UnitSystem::position_to_si)
        .def("position_from_si", &units::UnitSystem::position_from_si)
        .def("time_to_si", &units::UnitSystem::time_to_si)
        .def("time_from_si", &units::UnitSystem::time_from_si);

    m.def(
        "run_separation",
        [](double omega_r, double kappa, double final_separation, double transverse,
           double duration, std::size_t steps, int dims, bool fock, int fock_cutoff,
           int fock_nodes) {
            const auto spec = spec_from_kwargs(omega_r, kappa, final_separation, transverse,
                                               duration, steps, dims, fock, fock_cutoff,
                                               fock_nodes);
            return result_to_dict(protocols::run(spec));
        },
        py::arg("omega_r") = 10.0, py::arg("kappa") = 0.0, py::arg("final_separation") = 2.6e4,
        py::arg("transverse") = 1.3e4, py::arg("duration") = 3.0, py::arg("steps") = 4000,
        py::arg("dims") = 2, py::arg("fock") = false, py::arg("fock_cutoff") = 4,
        py::arg("fock_nodes") = 32,
        "Run a separation protocol in oscillator units (omega_t = m = hbar = 1)");

    m.def(
        "sweep_separation",
        [](const std::vector<double>& durations, double omega_r, double kappa,
           double final_separation, double transverse, std::size_t steps, int dims) {
            const auto spec = spec_from_kwargs(omega_r, kappa, final_separation, transverse, 3.0,
                                               steps, dims, false, 4, 32);
            py::list out;
            for (const auto& p : protocols::sweep(spec, durations)) {
                py::dict d;
                d["T"] = p.duration;
                d["fidelity"] = p.fidelity;
                d["residual"] = p.max_residual;
                d["status"] = p.status;
                out.append(d);
            }
            return out;
        },
        py::arg("durations"), py::arg("omega_r") = 10.0, py::arg("kappa") = 0.0,
        py::arg("final_separation") = 2.6e4, py::arg("transverse") = 1.3e4,
        py::arg("steps") = 4000, py::arg("dims") = 2,
        "Fidelity-vs-duration sweep; one dict per duration");

    m.attr("__version__") = artifacts::kToolVersion;
}
