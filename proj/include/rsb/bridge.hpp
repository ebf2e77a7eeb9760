#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsb/fem.hpp"
#include "rsb/mesh.hpp"
#include "rsb/sparse.hpp"

namespace rsb {

/// How the convection term enters the backward (phi) system.
///
/// `adjoint`: backward Euler of d_t phi = -v.grad phi - (eps/2) lap phi run from t = 1
/// down to 0, giving M - dt C + (eps/2) dt L. `shared`: reuse the forward matrix
/// M + dt C + (eps/2) dt L for both sweeps. Both coincide when there is no drift.
enum class BackwardConvection { adjoint, shared };

/// What happens to the carried terminal guess phi_hat(T) between iterations.
///
/// The alternating map is homogeneous of degree one, so its fixed points come in rays.
/// With the consistent mass matrix inside the time steps and lumped marginals, one pass
/// also rescales the ray by a factor close to, but not exactly, one, and the absolute
/// change of phi_hat(T) then settles at that drift instead of going to zero. `norm`
/// rescales the carried guess back to the lumped L2 norm of the initial guess after every
/// pass. Stored fields are left as computed, so rho and the control are unaffected.
/// `none` keeps the plain alternation.
enum class GaugeFix { norm, none };

struct SolverConfig {
    double epsilon = 0.5;
    int time_steps = 40;
    double fixed_point_tol = 1e-2;
    int max_fixed_point_iters = 50;
    double positivity_floor = 1e-12;
    GmresSettings gmres;
    /// Constant initial guess for phi_hat at the terminal time.
    double initial_terminal_scale = 1.0;
    BackwardConvection backward_convection = BackwardConvection::adjoint;
    GaugeFix gauge = GaugeFix::norm;
    /// Keep phi_hat(T) of every iterate (used by the Sinkhorn comparison).
    bool record_terminal_history = false;

    void validate() const;
    double dt() const noexcept { return 1.0 / time_steps; }
};

/// Nodal values at every time level k = 0..K, stored level-major.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(int time_steps, std::size_t nodes, double fill = 0.0);

    int time_steps() const noexcept { return time_steps_; }
    int levels() const noexcept { return time_steps_ + 1; }
    std::size_t nodes() const noexcept { return nodes_; }

    std::span<double> level(int k);
    std::span<const double> level(int k) const;

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    double min() const;

private:
    int time_steps_ = 0;
    std::size_t nodes_ = 0;
    std::vector<double> data_;
};

struct SystemMatrix {
    CsrMatrix matrix;
    Ilu0Preconditioner preconditioner;

    explicit SystemMatrix(CsrMatrix a) : matrix(std::move(a)), preconditioner(matrix) {}
};

/// Forward system and, when it differs, the backward one. Both are assembled and
/// factored once since the drift is static.
struct SystemMatrices {
    SystemMatrix forward;
    std::optional<SystemMatrix> backward_override;

    const SystemMatrix& backward() const noexcept { return backward_override ? *backward_override : forward; }
};

SystemMatrices build_system_matrix(const AssembledOperators& ops, const SolverConfig& config);

struct StepOutcome {
    NodalField values;
    int gmres_iterations = 0;
    double residual = 0.0;
};

/// Solves A x = M state, warm-started from `state`. Throws SolverError when GMRES
/// exhausts its budget.
StepOutcome implicit_step(const SystemMatrix& system, const CsrMatrix& mass, std::span<const double> state,
                          const GmresSettings& settings);

StepOutcome forward_step(const SystemMatrices& systems, const CsrMatrix& mass, std::span<const double> state,
                         const GmresSettings& settings);
StepOutcome backward_step(const SystemMatrices& systems, const CsrMatrix& mass, std::span<const double> state,
                          const GmresSettings& settings);

struct SweepResult {
    SpaceTimeField field;
    std::vector<int> gmres_iterations; // indexed by the level produced by each step
};

/// K implicit steps from level K down to 0 (backward) or 0 up to K (forward), applying
/// max(., floor) to the input and after every step.
SweepResult sweep_backward(const SystemMatrices& systems, const CsrMatrix& mass, std::span<const double> terminal,
                           const SolverConfig& config);
SweepResult sweep_forward(const SystemMatrices& systems, const CsrMatrix& mass, std::span<const double> initial,
                          const SolverConfig& config);

struct GmresRecord {
    int iteration = 0;
    int level = 0;
    std::string direction; // "backward" or "forward"
    int gmres_iterations = 0;
};

struct BridgeSolution {
    SpaceTimeField phi;
    SpaceTimeField phi_hat;
    SpaceTimeField rho;
    int iterations_used = 0;
    bool converged = false;
    std::vector<double> errors;            // ||phi_hat^{m+1}(T) - phi_hat^m(T)|| per iterate
    std::vector<double> terminal_mismatch; // ||phi(T) phi_hat(T) - rho_1|| per iterate
    std::vector<GmresRecord> gmres;
    std::vector<NodalField> terminal_history; // carried phi_hat(T) per iterate
    std::vector<double> gauge_factors;        // rescaling applied per iterate (1 without gauge fix)
    double epsilon = 0.0;
    double positivity_floor = 0.0;

    int time_steps() const noexcept { return phi.time_steps(); }
    double mean_gmres_iterations() const;
};

/// Alternating backward/forward sweeps coupled through the endpoint densities until the
/// lumped L2 change of phi_hat(T) drops below the tolerance.
BridgeSolution fixed_point_solve(const AssembledOperators& ops, const SystemMatrices& systems,
                                 const SolverConfig& config, std::span<const double> rho0,
                                 std::span<const double> rho1);
BridgeSolution fixed_point_solve(const SimplexMesh& mesh, const AssembledOperators& ops, const SolverConfig& config,
                                 std::span<const double> rho0, std::span<const double> rho1);

std::vector<double> mass_history(const BridgeSolution& solution, std::span<const double> weights);
double mass_error(std::span<const double> history);

/// eps grad(phi)/phi at (x, t): phi is linear in time between levels and P1 in space,
/// the gradient is constant on the containing element. nullopt outside the mesh.
std::optional<Vec3> recover_control(const BridgeSolution& solution, const PointLocator& locator, const Vec3& x,
                                    double t);

/// Control sampled at each element centroid at level k.
std::vector<Vec3> element_control(const BridgeSolution& solution, const SimplexMesh& mesh, int level);
/// Volume-weighted nodal average of element_control, for export.
NodalVectorField nodal_control(const BridgeSolution& solution, const SimplexMesh& mesh, int level);
/// sqrt(sum_k dt_k sum_e V_e |u_e(t_k)|^2) with trapezoid weights in time.
double control_l2_norm(const BridgeSolution& solution, const SimplexMesh& mesh);

/// lambda = eps ln(phi) at one level.
NodalField value_function(const BridgeSolution& solution, int level);

} // namespace rsb
