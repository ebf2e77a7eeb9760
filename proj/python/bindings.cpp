#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "rsb/config.hpp"
#include "rsb/errors.hpp"
#include "rsb/fem.hpp"
#include "rsb/geometry.hpp"
#include "rsb/io.hpp"
#include "rsb/pipeline.hpp"

namespace py = pybind11;
using namespace rsb;

namespace {

py::array_t<double> to_array(std::span<const double> v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<double> to_array(const std::vector<Vec3>& v) {
    py::array_t<double> out({static_cast<py::ssize_t>(v.size()), py::ssize_t{3}});
    auto r = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < r.shape(0); ++i) {
        r(i, 0) = v[i].x;
        r(i, 1) = v[i].y;
        r(i, 2) = v[i].z;
    }
    return out;
}

Vec3 to_vec3(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }
std::array<double, 3> from_vec3(const Vec3& v) { return {v.x, v.y, v.z}; }

// (data, indices, indptr), ready for scipy.sparse.csr_matrix.
py::tuple csr_tuple(const CsrMatrix& a) {
    const auto off = a.row_offsets();
    const auto col = a.column_indices();
    return py::make_tuple(to_array(a.values()), py::array_t<int>(col.size(), col.data()),
                          py::array_t<int>(off.size(), off.data()));
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Reflected Schrodinger bridge solver on masked tetrahedral meshes";
    m.attr("__version__") = RSB_VERSION;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<MeshError>(m, "MeshError", base.ptr());
    py::register_exception<SolverError>(m, "SolverError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    py::class_<HelixSpec>(m, "HelixSpec")
        .def(py::init<>())
        .def_readwrite("center_x", &HelixSpec::center_x)
        .def_readwrite("center_y", &HelixSpec::center_y)
        .def_readwrite("radius", &HelixSpec::radius)
        .def_readwrite("angular_rate", &HelixSpec::angular_rate)
        .def_readwrite("tube_radius", &HelixSpec::tube_radius);

    m.def("helix_point", [](double z, const HelixSpec& s) { return from_vec3(helix_point(z, s)); }, py::arg("z"),
          py::arg("spec") = HelixSpec{});
    m.def("tube_sdf", [](const std::array<double, 3>& x, const HelixSpec& s) { return tube_sdf(to_vec3(x), s); },
          py::arg("x"), py::arg("spec") = HelixSpec{});

    py::class_<RunConfig>(m, "RunConfig")
        .def_readwrite("resolution", &RunConfig::resolution)
        .def_property(
            "epsilon", [](const RunConfig& c) { return c.solver.epsilon; },
            [](RunConfig& c, double v) { c.solver.epsilon = v; })
        .def_property(
            "time_steps", [](const RunConfig& c) { return c.solver.time_steps; },
            [](RunConfig& c, int v) { c.solver.time_steps = v; })
        .def_property(
            "tolerance", [](const RunConfig& c) { return c.solver.fixed_point_tol; },
            [](RunConfig& c, double v) { c.solver.fixed_point_tol = v; })
        .def_property(
            "particles", [](const RunConfig& c) { return c.particles.particles; },
            [](RunConfig& c, int v) { c.particles.particles = v; })
        .def_property(
            "particle_steps", [](const RunConfig& c) { return c.particles.steps; },
            [](RunConfig& c, int v) { c.particles.steps = v; })
        .def_readwrite("output_directory", &RunConfig::output_directory)
        .def("validate", &RunConfig::validate)
        .def("dump", &dump_config);

    m.def(
        "parse_config",
        [](const std::string& text, const std::vector<std::string>& overrides) {
            std::istringstream in(text);
            return parse_config(in, overrides);
        },
        py::arg("text"), py::arg("overrides") = std::vector<std::string>{});
    m.def("load_config", &load_config, py::arg("path"), py::arg("overrides") = std::vector<std::string>{});

    py::class_<BridgeSolution>(m, "BridgeSolution")
        .def_readonly("iterations", &BridgeSolution::iterations_used)
        .def_readonly("converged", &BridgeSolution::converged)
        .def_readonly("errors", &BridgeSolution::errors)
        .def_property_readonly("time_steps", &BridgeSolution::time_steps)
        .def_property_readonly("mean_gmres_iterations", &BridgeSolution::mean_gmres_iterations)
        .def("rho", [](const BridgeSolution& s, int k) { return to_array(s.rho.level(k)); }, py::arg("level"))
        .def("phi", [](const BridgeSolution& s, int k) { return to_array(s.phi.level(k)); }, py::arg("level"))
        .def("phi_hat", [](const BridgeSolution& s, int k) { return to_array(s.phi_hat.level(k)); },
             py::arg("level"));

    py::class_<SolveSummary>(m, "SolveSummary")
        .def_readonly("solution", &SolveSummary::solution)
        .def_readonly("masses", &SolveSummary::masses)
        .def_readonly("mass_error", &SolveSummary::mass_error)
        .def_readonly("control_norm", &SolveSummary::control_norm);

    py::class_<Ensemble>(m, "Ensemble")
        .def_property_readonly("terminal_mean", [](const Ensemble& e) { return from_vec3(e.stats.terminal_mean); })
        .def_property_readonly("fraction_above", [](const Ensemble& e) { return e.stats.fraction_above; })
        .def_property_readonly("mean_height", [](const Ensemble& e) { return e.stats.mean_height; })
        .def("positions", [](const Ensemble& e, std::size_t i) { return to_array(e.paths.at(i).positions); },
             py::arg("particle"))
        .def("__len__", [](const Ensemble& e) { return e.paths.size(); });

    py::class_<Problem>(m, "Problem")
        .def_readonly("config", &Problem::config)
        .def_readonly("skewness", &Problem::skewness)
        .def_readonly("warnings", &Problem::warnings)
        .def_property_readonly("vertices", [](const Problem& p) { return to_array(p.mesh.vertices); })
        .def_property_readonly("tets",
                               [](const Problem& p) {
                                   py::array_t<int> out({static_cast<py::ssize_t>(p.mesh.tets.size()), py::ssize_t{4}});
                                   auto r = out.mutable_unchecked<2>();
                                   for (py::ssize_t e = 0; e < r.shape(0); ++e) {
                                       for (int q = 0; q < 4; ++q) {
                                           r(e, q) = p.mesh.tets[e][q];
                                       }
                                   }
                                   return out;
                               })
        .def_property_readonly("lumped_mass", [](const Problem& p) { return to_array(p.ops.lumped_mass); })
        .def_property_readonly("rho0", [](const Problem& p) { return to_array(p.rho0); })
        .def_property_readonly("rho1", [](const Problem& p) { return to_array(p.rho1); })
        .def_property_readonly("mass_matrix", [](const Problem& p) { return csr_tuple(p.ops.mass); })
        .def_property_readonly("stiffness_matrix", [](const Problem& p) { return csr_tuple(p.ops.stiffness); })
        .def_property_readonly("convection_matrix",
                               [](const Problem& p) -> py::object {
                                   if (!p.ops.convection) {
                                       return py::none();
                                   }
                                   return csr_tuple(*p.ops.convection);
                               })
        .def("describe", [](const Problem& p) { return describe_mesh(p.mesh); });

    m.def("build_problem", &build_problem, py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m.def("solve", &solve_problem, py::arg("problem"), py::call_guard<py::gil_scoped_release>());
    m.def("write_artifacts", &write_solve_artifacts, py::arg("problem"), py::arg("summary"));
    m.def(
        "simulate",
        [](const Problem& p, const SolveSummary* s, bool controlled) {
            py::gil_scoped_release release;
            return run_ensemble(p, s ? &s->solution : nullptr, p.drift_values, controlled && s != nullptr);
        },
        py::arg("problem"), py::arg("summary") = nullptr, py::arg("controlled") = true);
}
