#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rsb/bridge.hpp"
#include "rsb/config.hpp"
#include "rsb/fem.hpp"
#include "rsb/geometry.hpp"
#include "rsb/hodge.hpp"
#include "rsb/mesh.hpp"
#include "rsb/particles.hpp"

namespace rsb {

/// Wall-clock seconds per named stage, in execution order.
class Timings {
public:
    void add(std::string stage, double seconds) { entries_.emplace_back(std::move(stage), seconds); }
    const std::vector<std::pair<std::string, double>>& entries() const noexcept { return entries_; }
    double total() const;

private:
    std::vector<std::pair<std::string, double>> entries_;
};

/// Settings of the Neumann solve inside the Hodge projection. Kept apart from the time
/// stepping settings since the singular Poisson problem needs a much larger Krylov space.
GmresSettings projection_gmres_settings();

/// Everything assembled before the fixed point starts.
struct Problem {
    RunConfig config;
    std::shared_ptr<const HelixTube> tube; // null for the box domain
    Sdf domain;                            // particle domain, clipped to the meshing box
    SimplexMesh mesh;
    AssembledOperators ops;
    NodalField rho0;
    NodalField rho1;
    std::optional<DriftField> drift;
    NodalVectorField drift_values; // what C and the particles see; empty when there is no drift
    double skewness = 0.0;         // of C, zero without drift
    std::vector<std::string> warnings;
    Timings timings;
};

/// Builds mesh, operators and densities, then the drift and the convection matrix.
/// Mesh problems raise MeshError, bad densities or a malformed drift file ConfigError.
Problem build_problem(const RunConfig& config);

struct SolveSummary {
    BridgeSolution solution;
    std::vector<double> masses;
    double mass_error = 0.0;
    double control_norm = 0.0;
};

SolveSummary solve_problem(Problem& problem);

/// rho_%04d.vtk levels, fixed_point.csv, mass.csv, gmres.csv, solution.bin, drift.txt,
/// config.cfg and manifest.txt inside the configured output directory.
void write_solve_artifacts(const Problem& problem, const SolveSummary& summary);

/// Reloads solution.bin (and drift.txt when present) from `solution_dir`.
struct LoadedSolution {
    BridgeSolution solution;
    NodalVectorField drift;
};
LoadedSolution load_solve_artifacts(const Problem& problem, const std::filesystem::path& solution_dir);

/// One ensemble on the problem domain; with `controlled` false the bridge is ignored and
/// only the drift (if any) and the noise act.
Ensemble run_ensemble(const Problem& problem, const BridgeSolution* solution, const NodalVectorField& drift,
                      bool controlled);

enum class StudyAxis { h, dt };

struct StudyRow {
    int level = 0;
    double h_or_dt = 0.0;
    double error = 0.0;
    std::optional<double> rate; // against the previous row
};

struct StudyResult {
    StudyAxis axis = StudyAxis::h;
    std::vector<StudyRow> rows;
    double fitted_slope = 0.0; // least squares in log-log over every row with positive error
};

/// Solves level 0 .. levels-1 with the resolution (h axis) or the number of time steps
/// (dt axis) doubled per level, and measures the space-time lumped L2 distance of rho to
/// the finest level on the nodes and time levels all of them share.
StudyResult run_study(const RunConfig& base, StudyAxis axis, int levels);
void write_study_csv(const std::filesystem::path& path, const StudyResult& study);

/// Space-time lumped L2 distance between two solutions whose ladders nest. The coarse
/// mesh nodes are found on the fine mesh through their lattice coordinates.
double nested_rho_distance(const SimplexMesh& coarse_mesh, const AssembledOperators& coarse_ops,
                           const BridgeSolution& coarse, const SimplexMesh& fine_mesh, const BridgeSolution& fine);

std::string describe_mesh(const SimplexMesh& mesh);

} // namespace rsb
