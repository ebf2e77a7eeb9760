// Command line front end: solve, simulate, study, export-mesh.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "rsb/config.hpp"
#include "rsb/errors.hpp"
#include "rsb/io.hpp"
#include "rsb/pipeline.hpp"

namespace {

using namespace rsb;

struct CommonArgs {
    std::string config;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
    auto* opt = cmd->add_option("-c,--config", args.config, "Run configuration file");
    if (config_required) {
        opt->required()->check(CLI::ExistingFile);
    }
    cmd->add_option("--set", args.overrides, "Override a config value, section.key=value")->take_all();
}

void report(const Problem& p) {
    std::cout << "mesh: " << describe_mesh(p.mesh) << '\n';
    if (p.drift) {
        std::cout << "drift: divergence residual " << p.drift->input_divergence_residual << " -> "
                  << p.drift->divergence_residual << ", tangency " << p.drift->tangency_residual << '\n';
    }
    if (p.ops.convection) {
        std::cout << "convection skewness: " << p.skewness << '\n';
    }
    for (const auto& w : p.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
}

int cmd_solve(const CommonArgs& args, const std::optional<std::string>& output) {
    RunConfig cfg = load_config(args.config, args.overrides);
    if (output) {
        cfg.output_directory = *output;
    }
    Problem p = build_problem(cfg);
    report(p);
    const SolveSummary s = solve_problem(p);
    write_solve_artifacts(p, s);
    const BridgeSolution& sol = s.solution;
    std::cout << "fixed point: " << sol.iterations_used << " iterations, last change "
              << (sol.errors.empty() ? 0.0 : sol.errors.back()) << '\n'
              << "mass error: " << s.mass_error << '\n'
              << "mean GMRES iterations: " << sol.mean_gmres_iterations() << '\n'
              << "artifacts: " << cfg.output_directory.string() << '\n';
    if (!sol.converged) {
        std::cerr << "rsb: solver error: fixed point did not reach tolerance " << cfg.solver.fixed_point_tol
                  << " in " << cfg.solver.max_fixed_point_iters << " iterations\n";
        return kExitSolver;
    }
    return 0;
}

int cmd_simulate(const CommonArgs& args, const std::string& solution_dir, const std::optional<std::string>& output,
                 bool paired, bool uncontrolled) {
    const std::filesystem::path dir(solution_dir);
    std::filesystem::path config_path = args.config.empty() ? dir / "config.cfg" : std::filesystem::path(args.config);
    if (!std::filesystem::exists(config_path)) {
        throw IoError("no configuration at " + config_path.string());
    }
    RunConfig cfg = load_config(config_path, args.overrides);
    if (uncontrolled) {
        cfg.particles_controlled = false;
    }
    Problem p = build_problem(cfg);
    const LoadedSolution loaded = load_solve_artifacts(p, dir);
    const std::filesystem::path out_dir = output ? std::filesystem::path(*output) : dir;
    std::filesystem::create_directories(out_dir);

    auto run = [&](bool controlled, const std::string& suffix) {
        const Ensemble ens = run_ensemble(p, &loaded.solution, loaded.drift, controlled);
        write_trajectories_csv(out_dir / ("trajectories" + suffix + ".csv"), ens);
        write_ensemble_stats_csv(out_dir / ("ensemble" + suffix + ".csv"), ens);
        std::cout << (controlled ? "controlled" : "uncontrolled") << ": terminal mean z "
                  << ens.stats.terminal_mean.z << ", fraction above " << ens.stats.height_threshold << ' '
                  << ens.stats.fraction_above << '\n';
    };
    run(cfg.particles_controlled, "");
    if (paired && cfg.particles_controlled) {
        run(false, "_uncontrolled");
    }
    return 0;
}

int cmd_study(const CommonArgs& args, const std::string& axis_name, int levels,
              const std::optional<std::string>& output) {
    const RunConfig cfg = load_config(args.config, args.overrides);
    const StudyAxis axis = axis_name == "h" ? StudyAxis::h : StudyAxis::dt;
    const StudyResult study = run_study(cfg, axis, levels);
    const std::filesystem::path path =
        output ? std::filesystem::path(*output) : cfg.output_directory / ("study_" + axis_name + ".csv");
    write_study_csv(path, study);
    for (const auto& r : study.rows) {
        std::cout << "level " << r.level << ' ' << axis_name << ' ' << r.h_or_dt << " error " << r.error;
        if (r.rate) {
            std::cout << " rate " << *r.rate;
        }
        std::cout << '\n';
    }
    std::cout << "fitted slope " << study.fitted_slope << "\nwrote " << path.string() << '\n';
    return 0;
}

int cmd_export_mesh(const CommonArgs& args, const std::string& output, bool matrices) {
    const RunConfig cfg = load_config(args.config, args.overrides);
    RunConfig mesh_only = cfg;
    mesh_only.drift_mode = DriftMode::none;
    const Problem p = build_problem(mesh_only);
    std::vector<double> sdf(p.mesh.vertex_count());
    for (std::size_t i = 0; i < sdf.size(); ++i) {
        sdf[i] = p.domain(p.mesh.vertices[i]);
    }
    const std::filesystem::path path(output);
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    write_vtk(path, p.mesh, {{"sdf", sdf}, {"lumped_mass", p.ops.lumped_mass}}, {}, "rsbridge mesh");
    if (matrices) {
        const auto base = path.parent_path() / path.stem();
        write_matrix_market(base.string() + "_mass.mtx", p.ops.mass);
        write_matrix_market(base.string() + "_stiffness.mtx", p.ops.stiffness);
    }
    std::cout << "mesh: " << describe_mesh(p.mesh) << "\nwrote " << path.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reflected Schrodinger bridge solver on masked tetrahedral meshes"};
    app.set_version_flag("--version", std::string(RSB_VERSION));
    app.require_subcommand(1);

    CommonArgs solve_args;
    std::optional<std::string> solve_out;
    auto* solve = app.add_subcommand("solve", "Run the fixed point and write field artifacts");
    add_common(solve, solve_args);
    solve->add_option("-o,--output", solve_out, "Output directory (overrides output.directory)");

    CommonArgs sim_args;
    std::string sim_dir;
    std::optional<std::string> sim_out;
    bool paired = false;
    bool uncontrolled = false;
    auto* simulate = app.add_subcommand("simulate", "Run a particle ensemble on a stored solution");
    add_common(simulate, sim_args, false);
    simulate->add_option("-s,--solution", sim_dir, "Directory written by solve")->required();
    simulate->add_option("-o,--output", sim_out, "Where to write trajectories (default: the solution directory)");
    simulate->add_flag("--paired", paired, "Also run the uncontrolled ensemble with the same seed");
    simulate->add_flag("--uncontrolled", uncontrolled, "Ignore the control");

    CommonArgs study_args;
    std::string axis = "h";
    int levels = 3;
    std::optional<std::string> study_out;
    auto* study = app.add_subcommand("study", "Self-convergence ladder in h or dt");
    add_common(study, study_args);
    study->add_option("--axis", axis, "h or dt")->check(CLI::IsMember({"h", "dt"}));
    study->add_option("--levels", levels, "Number of refinement levels (at least 3)");
    study->add_option("-o,--output", study_out, "CSV path");

    CommonArgs mesh_args;
    std::string mesh_out;
    bool matrices = false;
    auto* export_mesh = app.add_subcommand("export-mesh", "Write the masked mesh as VTK");
    add_common(export_mesh, mesh_args);
    export_mesh->add_option("-o,--output", mesh_out, "VTK path")->required();
    export_mesh->add_flag("--matrices", matrices, "Also write mass and stiffness in Matrix Market form");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*solve) {
            return cmd_solve(solve_args, solve_out);
        }
        if (*simulate) {
            return cmd_simulate(sim_args, sim_dir, sim_out, paired, uncontrolled);
        }
        if (*study) {
            return cmd_study(study_args, axis, levels, study_out);
        }
        return cmd_export_mesh(mesh_args, mesh_out, matrices);
    } catch (const ConfigError& e) {
        std::cerr << "rsb: config error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const MeshError& e) {
        std::cerr << "rsb: mesh error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const SolverError& e) {
        std::cerr << "rsb: solver error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const IoError& e) {
        std::cerr << "rsb: I/O error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "rsb: I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "rsb: error: " << e.what() << '\n';
        return 1;
    }
}
