// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion, writes the same
// lines to acceptance_report.txt and exits non-zero when any criterion fails.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rsb/bridge.hpp"
#include "rsb/config.hpp"
#include "rsb/fem.hpp"
#include "rsb/hodge.hpp"
#include "rsb/mesh.hpp"
#include "rsb/pipeline.hpp"

using namespace rsb;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double max_rel_gap(std::span<const double> a, std::span<const double> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return den > 0.0 ? num / den : num;
}

double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

Eigen::MatrixXd dense(const CsrMatrix& a) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows(), a.rows());
    const auto off = a.row_offsets();
    const auto col = a.column_indices();
    const auto val = a.values();
    for (int i = 0; i < a.rows(); ++i) {
        for (int p = off[i]; p < off[i + 1]; ++p) {
            d(i, col[p]) += val[p];
        }
    }
    return d;
}

SimplexMesh cube(int n) {
    const Box box;
    return generate_masked_mesh(n, [box](const Vec3& x) { return box_sdf(x, box); });
}

// Divergence-free, tangent to the cube walls, plus a constant that the projection reshapes.
NodalVectorField projected_cube_drift(const SimplexMesh& mesh, const AssembledOperators& ops) {
    NodalVectorField v(mesh.vertex_count());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec3& p = mesh.vertices[i];
        const double f = p.x * (1 - p.x) * p.y * (1 - p.y);
        const double fx = (1 - 2 * p.x) * p.y * (1 - p.y);
        const double fy = p.x * (1 - p.x) * (1 - 2 * p.y);
        v[i] = Vec3{2 * f * fy, -2 * f * fx, 0.0} * 40.0 + Vec3{0.4, 0.1, -0.2};
    }
    return project_divergence_free(mesh, ops, v, projection_gmres_settings()).values;
}

SolverConfig tight(int k, double eps = 0.5) {
    SolverConfig c;
    c.epsilon = eps;
    c.time_steps = k;
    c.gmres = {1e-13, 100, 5000};
    return c;
}

Outcome matrix_suite() {
    const std::array<Vec3, 4> corners{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    SimplexMesh tet;
    tet.vertices.assign(corners.begin(), corners.end());
    tet.tets.push_back({0, 1, 2, 3});
    tet.lattice = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    tet.resolution = 1;
    const Eigen::MatrixXd m = dense(assemble_mass(tet));
    const Eigen::MatrixXd l = dense(assemble_stiffness(tet));
    double elem_err = 0.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const double m_ref = i == j ? 1.0 / 60.0 : 1.0 / 120.0;
            double l_ref = 0.0;
            if (i == 0 && j == 0) {
                l_ref = 0.5;
            } else if (i == 0 || j == 0) {
                l_ref = -1.0 / 6.0;
            } else if (i == j) {
                l_ref = 1.0 / 6.0;
            }
            elem_err = std::max({elem_err, std::abs(m(i, j) - m_ref), std::abs(l(i, j) - l_ref)});
        }
    }

    const SimplexMesh mesh = cube(6);
    AssembledOperators ops = assemble_operators(mesh);
    ops.convection = assemble_convection(mesh, projected_cube_drift(mesh, ops));
    const std::vector<double> ones(mesh.vertex_count(), 1.0);
    const double sym = std::max(symmetry_defect(ops.mass), symmetry_defect(ops.stiffness));
    const double l1 = max_abs(spmv(ops.stiffness, ones));
    const double c1 = max_abs(spmv(*ops.convection, ones));
    const SystemMatrices s = build_system_matrix(ops, tight(20));
    const double a1 = std::max(max_rel_gap(spmv(s.forward.matrix, ones), spmv(ops.mass, ones)),
                               max_rel_gap(spmv(s.backward().matrix, ones), spmv(ops.mass, ones)));
    const bool pass = elem_err <= 1e-12 && sym <= 1e-12 && l1 <= 1e-10 && c1 <= 1e-10 && a1 <= 1e-12;
    return {pass, fmt("element error %.1e, symmetry %.1e, |L1| %.1e, |C1| %.1e, A1 vs M1 %.1e", elem_err, sym, l1,
                      c1, a1)};
}

Outcome constant_preservation() {
    const SimplexMesh mesh = cube(6);
    AssembledOperators ops = assemble_operators(mesh);
    const NodalVectorField drift = projected_cube_drift(mesh, ops);
    double worst = 0.0;
    int cases = 0;
    for (bool with_drift : {false, true}) {
        ops.convection.reset();
        if (with_drift) {
            ops.convection = assemble_convection(mesh, drift);
        }
        for (double eps : {0.05, 0.5, 2.0}) {
            for (int k : {1, 5, 40, 400}) {
                SolverConfig c = tight(k, eps);
                c.gmres.rel_tol = 1e-12;
                const SystemMatrices s = build_system_matrix(ops, c);
                const std::vector<double> state(mesh.vertex_count(), 2.5);
                worst = std::max(worst, max_rel_gap(forward_step(s, ops.mass, state, c.gmres).values, state));
                worst = std::max(worst, max_rel_gap(backward_step(s, ops.mass, state, c.gmres).values, state));
                // The steps warm-start from the state itself; solve again from zero.
                const auto rhs = spmv(ops.mass, state);
                for (const SystemMatrix* sys : {&s.forward, &s.backward()}) {
                    const GmresResult cold = gmres(sys->matrix, rhs, sys->preconditioner, c.gmres);
                    worst = std::max(worst, cold.converged ? max_rel_gap(cold.x, state) : 1.0);
                }
                cases += 4;
            }
        }
    }
    return {worst <= 1e-9, fmt("%d steps, worst relative deviation %.2e", cases, worst)};
}

Outcome trivial_bridge() {
    const SimplexMesh mesh = cube(8);
    const AssembledOperators ops = assemble_operators(mesh);
    const double volume = std::accumulate(ops.lumped_mass.begin(), ops.lumped_mass.end(), 0.0);
    const NodalField uniform(mesh.vertex_count(), 1.0 / volume);
    const SolverConfig c = tight(10);
    const BridgeSolution sol = fixed_point_solve(mesh, ops, c, uniform, uniform);
    double u_max = 0.0;
    for (int k = 0; k <= c.time_steps; ++k) {
        for (const Vec3& u : nodal_control(sol, mesh, k)) {
            u_max = std::max(u_max, norm(u));
        }
    }
    const double merr = mass_error(mass_history(sol, ops.lumped_mass));
    const bool pass = sol.converged && sol.iterations_used <= 2 && u_max <= 1e-8 && merr <= 1e-10;
    return {pass, fmt("converged %d in %d iterations, max control %.1e, mass error %.1e", sol.converged ? 1 : 0,
                      sol.iterations_used, u_max, merr)};
}

Outcome free_diffusion() {
    const SimplexMesh mesh = cube(8);
    const AssembledOperators ops = assemble_operators(mesh);
    const NodalField rho0 = project_density(mesh, ops.lumped_mass, {{0.3, 0.35, 0.3}, 0.15});
    SolverConfig c = tight(10);
    c.fixed_point_tol = 1e-12;
    c.max_fixed_point_iters = 500;
    const SystemMatrices s = build_system_matrix(ops, c);
    const SweepResult diffused = sweep_forward(s, ops.mass, rho0, c);
    const auto last = diffused.field.level(c.time_steps);
    const NodalField rho1(last.begin(), last.end());
    const BridgeSolution sol = fixed_point_solve(ops, s, c, rho0, rho1);
    double spread = 0.0;
    for (int k = 0; k <= c.time_steps; ++k) {
        const auto phi = sol.phi.level(k);
        const auto [lo, hi] = std::minmax_element(phi.begin(), phi.end());
        spread = std::max(spread, (*hi - *lo) / *hi);
    }
    const double u = control_l2_norm(sol, mesh);
    const bool pass = sol.converged && u <= 1e-6 && spread <= 1e-6;
    return {pass, fmt("%d iterations, control L2 %.2e, phi spread %.2e", sol.iterations_used, u, spread)};
}

Outcome sinkhorn_oracle() {
    const SimplexMesh mesh = cube(5);
    const AssembledOperators ops = assemble_operators(mesh);
    const std::size_t n = mesh.vertex_count();
    const NodalField rho0 = project_density(mesh, ops.lumped_mass, {{0.3, 0.35, 0.3}, 0.15});
    const NodalField rho1 = project_density(mesh, ops.lumped_mass, {{0.7, 0.6, 0.7}, 0.15});
    SolverConfig c = tight(8);
    c.gmres = {1e-14, 250, 5000};
    c.gauge = GaugeFix::none;
    c.fixed_point_tol = 1e-300;
    c.max_fixed_point_iters = 12;
    c.record_terminal_history = true;
    const BridgeSolution sol = fixed_point_solve(mesh, ops, c, rho0, rho1);

    // Dense heat propagator over the whole interval.
    const Eigen::MatrixXd mm = dense(ops.mass);
    const Eigen::MatrixXd a = mm + 0.5 * c.epsilon * c.dt() * dense(ops.stiffness);
    const Eigen::MatrixXd step = a.partialPivLu().solve(mm);
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (int k = 0; k < c.time_steps; ++k) {
        p = step * p;
    }
    const Eigen::Map<const Eigen::VectorXd> r0(rho0.data(), static_cast<Eigen::Index>(n));
    const Eigen::Map<const Eigen::VectorXd> r1(rho1.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd b = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    double worst = 0.0;
    for (int m = 0; m < c.max_fixed_point_iters; ++m) {
        const Eigen::VectorXd a_start = p * r1.cwiseQuotient(b);
        b = p * r0.cwiseQuotient(a_start);
        const auto& ours = sol.terminal_history[static_cast<std::size_t>(m)];
        worst = std::max(worst, max_rel_gap(ours, std::span<const double>(b.data(), n)));
    }
    const bool pass = n <= 300 && c.time_steps <= 8 && worst <= 1e-8;
    return {pass, fmt("%zu nodes, K %d, %d iterates, worst relative gap %.2e", n, c.time_steps,
                      c.max_fixed_point_iters, worst)};
}

struct DeskRun {
    Problem problem;
    SolveSummary summary;
    double seconds = 0.0;
};

DeskRun desk_run(const std::filesystem::path& cfg_path) {
    RunConfig cfg = load_config(cfg_path);
    const auto t0 = std::chrono::steady_clock::now();
    DeskRun run{build_problem(cfg), {}, 0.0};
    run.summary = solve_problem(run.problem);
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

Outcome desk_outcome(const DeskRun& run, double mass_tol, bool with_skew) {
    const BridgeSolution& sol = run.summary.solution;
    const double mean_gmres = sol.mean_gmres_iterations();
    bool pass = sol.converged && sol.iterations_used <= 6 && run.summary.mass_error <= mass_tol &&
                run.seconds <= 300.0;
    std::string detail = fmt("%zu nodes, %d iterations, mass error %.3f%%, mean GMRES %.1f, %.1f s",
                             run.problem.mesh.vertex_count(), sol.iterations_used, 100.0 * run.summary.mass_error,
                             mean_gmres, run.seconds);
    if (with_skew) {
        pass = pass && run.problem.skewness <= 0.1;
        detail += fmt(", skewness %.3f (limit 0.1)", run.problem.skewness);
    } else {
        pass = pass && mean_gmres <= 200.0;
    }
    return {pass, detail};
}

Outcome study_slopes(const std::filesystem::path& cfg_path) {
    const RunConfig cfg = load_config(cfg_path);
    const StudyResult h = run_study(cfg, StudyAxis::h, 3);
    const StudyResult dt = run_study(cfg, StudyAxis::dt, 5);
    const bool pass = std::abs(h.fitted_slope - 2.0) <= 1.0 && std::abs(dt.fitted_slope - 1.0) <= 0.5;
    return {pass, fmt("h slope %.2f over %zu levels, dt slope %.2f over %zu levels", h.fitted_slope, h.rows.size(),
                      dt.fitted_slope, dt.rows.size())};
}

Outcome particles(const DeskRun& run) {
    const Problem& p = run.problem;
    const BridgeSolution& sol = run.summary.solution;
    const Ensemble a = run_ensemble(p, &sol, p.drift_values, true);
    const Ensemble b = run_ensemble(p, &sol, p.drift_values, true);
    const Ensemble free = run_ensemble(p, &sol, p.drift_values, false);

    double worst_sdf = -1.0;
    std::size_t stored = 0;
    for (const Ensemble* e : {&a, &free}) {
        for (const auto& path : e->paths) {
            for (const Vec3& x : path.positions) {
                worst_sdf = std::max(worst_sdf, p.domain(x));
                ++stored;
            }
        }
    }
    bool same = a.paths.size() == b.paths.size();
    for (std::size_t i = 0; same && i < a.paths.size(); ++i) {
        const auto& pa = a.paths[i].positions;
        const auto& pb = b.paths[i].positions;
        same = pa.size() == pb.size();
        for (std::size_t j = 0; same && j < pa.size(); ++j) {
            same = pa[j].x == pb[j].x && pa[j].y == pb[j].y && pa[j].z == pb[j].z;
        }
    }
    const bool confined = worst_sdf <= 1e-9;
    const double frac = a.stats.fraction_above;
    const bool higher = a.stats.terminal_mean.z > free.stats.terminal_mean.z;
    const bool pass = confined && same && frac >= 0.8 && higher;
    return {pass, fmt("confined %d (max sdf %.1e over %zu positions), deterministic %d, fraction z>0.8 %.3f "
                      "(limit 0.8), mean z %.3f vs uncontrolled %.3f",
                      confined ? 1 : 0, worst_sdf, stored, same ? 1 : 0, frac, a.stats.terminal_mean.z,
                      free.stats.terminal_mean.z)};
}

Outcome gauge_invariance() {
    const SimplexMesh mesh = cube(6);
    const AssembledOperators ops = assemble_operators(mesh);
    const NodalField rho0 = project_density(mesh, ops.lumped_mass, {{0.3, 0.35, 0.3}, 0.15});
    const NodalField rho1 = project_density(mesh, ops.lumped_mass, {{0.7, 0.6, 0.7}, 0.15});
    double worst = 0.0;
    for (GaugeFix gauge : {GaugeFix::norm, GaugeFix::none}) {
        SolverConfig c = tight(10);
        c.gauge = gauge;
        c.fixed_point_tol = 1e-300;
        c.max_fixed_point_iters = 8;
        const BridgeSolution ref = fixed_point_solve(mesh, ops, c, rho0, rho1);
        for (double scale : {0.1, 10.0}) {
            c.initial_terminal_scale = scale;
            const BridgeSolution sol = fixed_point_solve(mesh, ops, c, rho0, rho1);
            for (int k = 0; k <= c.time_steps; ++k) {
                worst = std::max(worst, max_rel_gap(sol.rho.level(k), ref.rho.level(k)));
            }
        }
    }
    return {worst <= 1e-8, fmt("c in {0.1, 10}, both gauge modes, worst relative rho change %.2e", worst)};
}

} // namespace

int main(int argc, char** argv) {
    const std::filesystem::path source = argc > 1 ? argv[1] : RSB_SOURCE_DIR;
    const std::filesystem::path report_path = argc > 2 ? argv[2] : "acceptance_report.txt";
    const auto configs = source / "configs";

    std::vector<std::string> lines;
    int failed = 0;
    auto run = [&](int id, const std::string& name, const std::function<Outcome()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = body();
        } catch (const std::exception& e) {
            out = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ostringstream line;
        line << "criterion " << id << ' ' << (out.pass ? "PASS" : "FAIL") << " [" << name << "] " << out.detail
             << fmt(" (%.1f s)", secs);
        std::cout << line.str() << std::endl;
        lines.push_back(line.str());
        failed += out.pass ? 0 : 1;
    };

    run(1, "matrix suite", matrix_suite);
    run(2, "constant preservation", constant_preservation);
    run(3, "trivial bridge", trivial_bridge);
    run(4, "free diffusion", free_diffusion);
    run(5, "sinkhorn oracle", sinkhorn_oracle);
    run(6, "desk diffusion", [&] {
        const DeskRun r = desk_run(configs / "spiral_diffusion_desk.cfg");
        return desk_outcome(r, 0.03, false);
    });
    std::optional<DeskRun> drift;
    run(7, "desk drift", [&] {
        drift = desk_run(configs / "spiral_drift_desk.cfg");
        return desk_outcome(*drift, 0.05, true);
    });
    run(8, "convergence study", [&] { return study_slopes(configs / "heat_bridge.cfg"); });
    run(9, "particles", [&] {
        if (!drift) {
            drift = desk_run(configs / "spiral_drift_desk.cfg");
        }
        return particles(*drift);
    });
    run(10, "gauge invariance", gauge_invariance);

    const std::string summary = fmt("acceptance: %d of 10 criteria passed", 10 - failed);
    std::cout << summary << std::endl;
    std::ofstream report(report_path);
    for (const auto& l : lines) {
        report << l << '\n';
    }
    report << summary << '\n';
    return failed == 0 ? 0 : 1;
}
