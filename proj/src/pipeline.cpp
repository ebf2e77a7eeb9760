#include "rsb/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "rsb/errors.hpp"
#include "rsb/io.hpp"

namespace rsb {

namespace {

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - start_).count();
        start_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create output directory " + dir.string());
    }
}

bool all_zero(const NodalVectorField& v) {
    for (const Vec3& x : v) {
        if (x.x != 0.0 || x.y != 0.0 || x.z != 0.0) {
            return false;
        }
    }
    return true;
}

std::string level_name(int k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rho_%04d.vtk", k);
    return buf;
}

} // namespace

double Timings::total() const {
    double s = 0.0;
    for (const auto& [name, t] : entries_) {
        s += t;
    }
    return s;
}

GmresSettings projection_gmres_settings() { return {1e-10, 200, 20000}; }

Problem build_problem(const RunConfig& config) {
    config.validate();
    Problem p;
    p.config = config;
    Stopwatch clock;

    const Box unit_box;
    if (config.shape == DomainShape::helix) {
        p.tube = std::make_shared<const HelixTube>(config.helix);
        p.domain = clip_to_box(p.tube->as_sdf(), unit_box);
    } else {
        p.domain = [unit_box](const Vec3& x) { return box_sdf(x, unit_box); };
    }
    p.mesh = generate_masked_mesh(config.resolution, p.domain, unit_box);
    p.timings.add("mesh", clock.lap());

    p.ops = assemble_operators(p.mesh);
    p.timings.add("assemble", clock.lap());

    for (const GaussianSpec* g : {&config.initial, &config.terminal}) {
        const std::string w = check_gaussian_inside(*g, p.domain);
        if (!w.empty()) {
            p.warnings.push_back(w);
        }
    }
    p.rho0 = project_density(p.mesh, p.ops.lumped_mass, config.initial);
    p.rho1 = project_density(p.mesh, p.ops.lumped_mass, config.terminal);
    p.timings.add("densities", clock.lap());

    if (config.drift_mode == DriftMode::none) {
        return p;
    }
    NodalVectorField raw;
    if (config.drift_mode == DriftMode::helical) {
        raw.resize(p.mesh.vertex_count());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            raw[i] = p.tube ? p.tube->tangent_field(p.mesh.vertices[i], config.drift_magnitude)
                            : helical_tangent_field(p.mesh.vertices[i], config.helix, config.drift_magnitude);
        }
    } else {
        raw = load_nodal_vectors(config.drift_file);
        if (raw.size() != p.mesh.vertex_count()) {
            throw ConfigError("drift file " + config.drift_file.string() + " has " + std::to_string(raw.size()) +
                              " vectors, the mesh has " + std::to_string(p.mesh.vertex_count()) + " vertices");
        }
    }
    if (config.drift_project) {
        p.drift = project_divergence_free(p.mesh, p.ops, raw, projection_gmres_settings());
        p.drift_values = p.drift->values;
        p.timings.add("projection", clock.lap());
    } else {
        p.drift_values = std::move(raw);
    }
    if (all_zero(p.drift_values)) {
        p.drift_values.clear();
        return p;
    }
    p.ops.convection = assemble_convection(p.mesh, p.drift_values);
    p.skewness = skewness_defect(*p.ops.convection);
    p.timings.add("convection", clock.lap());
    return p;
}

SolveSummary solve_problem(Problem& problem) {
    Stopwatch clock;
    const SystemMatrices systems = build_system_matrix(problem.ops, problem.config.solver);
    problem.timings.add("factorize", clock.lap());
    SolveSummary out;
    out.solution = fixed_point_solve(problem.ops, systems, problem.config.solver, problem.rho0, problem.rho1);
    problem.timings.add("fixed_point", clock.lap());
    out.masses = mass_history(out.solution, problem.ops.lumped_mass);
    out.mass_error = mass_error(out.masses);
    out.control_norm = control_l2_norm(out.solution, problem.mesh);
    return out;
}

std::string describe_mesh(const SimplexMesh& mesh) {
    std::ostringstream os;
    os << "resolution " << mesh.resolution << ", " << mesh.vertex_count() << " vertices, " << mesh.element_count()
       << " tetrahedra, " << mesh.boundary_faces.size() << " boundary faces, volume " << std::setprecision(6)
       << mesh_volume(mesh);
    return os.str();
}

void write_solve_artifacts(const Problem& problem, const SolveSummary& summary) {
    const RunConfig& cfg = problem.config;
    const auto& dir = cfg.output_directory;
    ensure_directory(dir);
    const BridgeSolution& sol = summary.solution;

    if (cfg.write_vtk) {
        const int k_steps = sol.time_steps();
        for (int k = 0; k <= k_steps; ++k) {
            if (k % cfg.vtk_stride != 0 && k != k_steps) {
                continue;
            }
            const NodalVectorField control = nodal_control(sol, problem.mesh, k);
            std::vector<PointVectors> vectors{{"control", control}};
            if (!problem.drift_values.empty()) {
                vectors.push_back({"drift", problem.drift_values});
            }
            write_vtk(dir / level_name(k), problem.mesh,
                      {{"rho", sol.rho.level(k)}, {"phi", sol.phi.level(k)}, {"phi_hat", sol.phi_hat.level(k)}},
                      vectors, "rho t=" + std::to_string(static_cast<double>(k) / k_steps));
        }
    }
    write_fixed_point_csv(dir / "fixed_point.csv", sol);
    write_mass_csv(dir / "mass.csv", summary.masses);
    write_gmres_csv(dir / "gmres.csv", sol);
    save_solution(dir / "solution.bin", sol);
    if (!problem.drift_values.empty()) {
        save_nodal_vectors(dir / "drift.txt", problem.drift_values);
    }
    if (cfg.write_matrices) {
        write_matrix_market(dir / "mass.mtx", problem.ops.mass);
        write_matrix_market(dir / "stiffness.mtx", problem.ops.stiffness);
        if (problem.ops.convection) {
            write_matrix_market(dir / "convection.mtx", *problem.ops.convection);
        }
    }

    {
        std::ofstream out(dir / "config.cfg");
        out << dump_config(cfg);
        if (!out) {
            throw IoError("failed writing " + (dir / "config.cfg").string());
        }
    }

    std::ofstream m(dir / "manifest.txt");
    if (!m) {
        throw IoError("cannot open " + (dir / "manifest.txt").string());
    }
    m << std::setprecision(10);
    m << "rsbridge version " << RSB_VERSION << '\n';
    m << "mesh: " << describe_mesh(problem.mesh) << '\n';
    if (problem.drift) {
        m << "drift: divergence residual " << problem.drift->input_divergence_residual << " -> "
          << problem.drift->divergence_residual << " (element field " << problem.drift->element_divergence_residual
          << "), tangency residual " << problem.drift->tangency_residual << ", projection GMRES iterations "
          << problem.drift->gmres_iterations << '\n';
    }
    if (problem.ops.convection) {
        m << "convection skewness: " << problem.skewness << '\n';
    }
    m << "fixed point: " << sol.iterations_used << " iterations, " << (sol.converged ? "converged" : "not converged")
      << ", last change " << (sol.errors.empty() ? 0.0 : sol.errors.back()) << '\n';
    m << "mass error: " << summary.mass_error << '\n';
    m << "control L2 norm: " << summary.control_norm << '\n';
    m << "mean GMRES iterations per solve: " << sol.mean_gmres_iterations() << '\n';
    for (const auto& w : problem.warnings) {
        m << "warning: " << w << '\n';
    }
    m << "timings (s):\n";
    for (const auto& [stage, t] : problem.timings.entries()) {
        m << "  " << stage << ' ' << t << '\n';
    }
    m << "  total " << problem.timings.total() << '\n';
    m << "config:\n" << dump_config(cfg);
    if (!m) {
        throw IoError("failed writing manifest");
    }
}

LoadedSolution load_solve_artifacts(const Problem& problem, const std::filesystem::path& solution_dir) {
    const auto bin = solution_dir / "solution.bin";
    if (!std::filesystem::exists(bin)) {
        throw IoError("no solution.bin in " + solution_dir.string() + " (run solve first)");
    }
    LoadedSolution out;
    out.solution = load_solution(bin);
    if (out.solution.phi.nodes() != problem.mesh.vertex_count()) {
        throw IoError("solution in " + solution_dir.string() + " has " + std::to_string(out.solution.phi.nodes()) +
                      " nodes but the configured mesh has " + std::to_string(problem.mesh.vertex_count()));
    }
    const auto drift = solution_dir / "drift.txt";
    if (std::filesystem::exists(drift)) {
        out.drift = load_nodal_vectors(drift);
        if (out.drift.size() != problem.mesh.vertex_count()) {
            throw IoError(drift.string() + " does not match the mesh");
        }
    }
    return out;
}

Ensemble run_ensemble(const Problem& problem, const BridgeSolution* solution, const NodalVectorField& drift,
                      bool controlled) {
    const PointLocator locator(problem.mesh);
    ParticleModel model;
    model.sdf = &problem.domain;
    model.locator = &locator;
    model.solution = controlled ? solution : nullptr;
    model.drift = drift.empty() ? nullptr : &drift;
    model.epsilon = solution != nullptr ? solution->epsilon : problem.config.solver.epsilon;
    return simulate_ensemble(model, problem.config.initial, problem.config.particles);
}

double nested_rho_distance(const SimplexMesh& coarse_mesh, const AssembledOperators& coarse_ops,
                           const BridgeSolution& coarse, const SimplexMesh& fine_mesh, const BridgeSolution& fine) {
    if (fine_mesh.resolution % coarse_mesh.resolution != 0 || fine.time_steps() % coarse.time_steps() != 0) {
        throw std::invalid_argument("nested_rho_distance: the two discretisations do not nest");
    }
    const int space_ratio = fine_mesh.resolution / coarse_mesh.resolution;
    const int time_ratio = fine.time_steps() / coarse.time_steps();

    std::map<std::array<int, 3>, int> fine_index;
    for (std::size_t i = 0; i < fine_mesh.lattice.size(); ++i) {
        fine_index.emplace(fine_mesh.lattice[i], static_cast<int>(i));
    }
    std::vector<std::pair<int, int>> shared;
    for (std::size_t i = 0; i < coarse_mesh.lattice.size(); ++i) {
        const auto& l = coarse_mesh.lattice[i];
        const auto it = fine_index.find({l[0] * space_ratio, l[1] * space_ratio, l[2] * space_ratio});
        if (it != fine_index.end()) {
            shared.emplace_back(static_cast<int>(i), it->second);
        }
    }
    if (shared.empty()) {
        throw MeshError("nested_rho_distance: the meshes share no nodes");
    }

    const int k_steps = coarse.time_steps();
    const double dt = 1.0 / k_steps;
    double sum = 0.0;
    for (int k = 0; k <= k_steps; ++k) {
        const double wt = (k == 0 || k == k_steps) ? 0.5 * dt : dt;
        const auto a = coarse.rho.level(k);
        const auto b = fine.rho.level(k * time_ratio);
        double s = 0.0;
        for (const auto& [ci, fi] : shared) {
            const double d = a[ci] - b[fi];
            s += coarse_ops.lumped_mass[ci] * d * d;
        }
        sum += wt * s;
    }
    return std::sqrt(sum);
}

StudyResult run_study(const RunConfig& base, StudyAxis axis, int levels) {
    if (levels < 3) {
        throw ConfigError("a convergence study needs at least 3 levels");
    }
    base.validate();
    struct Level {
        Problem problem;
        BridgeSolution solution;
    };
    std::vector<Level> solved;
    solved.reserve(levels);
    for (int l = 0; l < levels; ++l) {
        RunConfig c = base;
        if (axis == StudyAxis::h) {
            c.resolution = base.resolution << l;
        } else {
            c.solver.time_steps = base.solver.time_steps << l;
        }
        Level lv{build_problem(c), {}};
        lv.solution = solve_problem(lv.problem).solution;
        if (!lv.solution.converged) {
            throw SolverError("study level " + std::to_string(l) + ": fixed point did not converge");
        }
        solved.push_back(std::move(lv));
    }

    StudyResult out;
    out.axis = axis;
    const Level& finest = solved.back();
    for (int l = 0; l < levels; ++l) {
        const Level& lv = solved[l];
        StudyRow row;
        row.level = l;
        row.h_or_dt = axis == StudyAxis::h ? lv.problem.mesh.cell_size() : lv.problem.config.solver.dt();
        row.error = nested_rho_distance(lv.problem.mesh, lv.problem.ops, lv.solution, finest.problem.mesh,
                                        finest.solution);
        if (!out.rows.empty() && out.rows.back().error > 0.0 && row.error > 0.0) {
            row.rate = std::log(out.rows.back().error / row.error) / std::log(out.rows.back().h_or_dt / row.h_or_dt);
        }
        out.rows.push_back(row);
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (const auto& r : out.rows) {
        if (r.error > 0.0) {
            const double x = std::log(r.h_or_dt);
            const double y = std::log(r.error);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
    }
    if (n >= 2) {
        out.fitted_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return out;
}

void write_study_csv(const std::filesystem::path& path, const StudyResult& study) {
    if (path.has_parent_path()) {
        ensure_directory(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "level,h_or_dt,error,rate\n" << std::setprecision(12);
    for (const auto& r : study.rows) {
        out << r.level << ',' << r.h_or_dt << ',' << r.error << ',';
        if (r.rate) {
            out << *r.rate;
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace rsb
