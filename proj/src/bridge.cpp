#include "rsb/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rsb/errors.hpp"

namespace rsb {

void SolverConfig::validate() const {
    if (!(epsilon > 0.0)) {
        throw ConfigError("solver epsilon must be positive");
    }
    if (time_steps < 1) {
        throw ConfigError("solver time_steps must be at least 1");
    }
    if (!(fixed_point_tol > 0.0)) {
        throw ConfigError("solver tolerance must be positive");
    }
    if (max_fixed_point_iters < 1) {
        throw ConfigError("solver max_iterations must be at least 1");
    }
    if (!(positivity_floor > 0.0)) {
        throw ConfigError("solver positivity_floor must be positive");
    }
    if (!(initial_terminal_scale > 0.0)) {
        throw ConfigError("solver initial_terminal_scale must be positive");
    }
    if (!(gmres.rel_tol > 0.0) || gmres.restart < 1 || gmres.max_iters < 1) {
        throw ConfigError("gmres settings must have positive tolerance, restart and budget");
    }
}

SpaceTimeField::SpaceTimeField(int time_steps, std::size_t nodes, double fill)
    : time_steps_(time_steps), nodes_(nodes), data_(static_cast<std::size_t>(time_steps + 1) * nodes, fill) {}

std::span<double> SpaceTimeField::level(int k) {
    return std::span<double>(data_).subspan(static_cast<std::size_t>(k) * nodes_, nodes_);
}

std::span<const double> SpaceTimeField::level(int k) const {
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(k) * nodes_, nodes_);
}

double SpaceTimeField::min() const { return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end()); }

SystemMatrices build_system_matrix(const AssembledOperators& ops, const SolverConfig& config) {
    config.validate();
    const double dt = config.dt();
    const double diffusion = 0.5 * config.epsilon * dt;
    CsrMatrix base = add_scaled(ops.mass, 1.0, ops.stiffness, diffusion);
    if (!ops.convection) {
        return {SystemMatrix(std::move(base)), std::nullopt};
    }
    SystemMatrix forward(add_scaled(base, 1.0, *ops.convection, dt));
    if (config.backward_convection == BackwardConvection::shared) {
        return {std::move(forward), std::nullopt};
    }
    return {std::move(forward), SystemMatrix(add_scaled(base, 1.0, *ops.convection, -dt))};
}

StepOutcome implicit_step(const SystemMatrix& system, const CsrMatrix& mass, std::span<const double> state,
                          const GmresSettings& settings) {
    const std::vector<double> rhs = mass.multiply(state);
    GmresResult solve = gmres(system.matrix, rhs, system.preconditioner, settings, state);
    if (!solve.converged) {
        std::ostringstream os;
        os << "GMRES did not converge (relative residual " << solve.residual << " after " << solve.iterations
           << " iterations)";
        throw SolverError(os.str());
    }
    return {std::move(solve.x), solve.iterations, solve.residual};
}

StepOutcome forward_step(const SystemMatrices& systems, const CsrMatrix& mass, std::span<const double> state,
                         const GmresSettings& settings) {
    return implicit_step(systems.forward, mass, state, settings);
}

StepOutcome backward_step(const SystemMatrices& systems, const CsrMatrix& mass, std::span<const double> state,
                          const GmresSettings& settings) {
    return implicit_step(systems.backward(), mass, state, settings);
}

namespace {

void apply_floor(std::span<double> values, double floor) {
    for (double& v : values) {
        v = std::max(v, floor);
    }
}

SweepResult sweep(const SystemMatrix& system, const CsrMatrix& mass, std::span<const double> start,
                  const SolverConfig& config, bool backward) {
    const int k_steps = config.time_steps;
    SweepResult out{SpaceTimeField(k_steps, start.size()), std::vector<int>(k_steps + 1, 0)};
    const int first = backward ? k_steps : 0;
    auto level = out.field.level(first);
    std::copy(start.begin(), start.end(), level.begin());
    apply_floor(level, config.positivity_floor);

    for (int s = 0; s < k_steps; ++s) {
        const int from = backward ? k_steps - s : s;
        const int to = backward ? from - 1 : from + 1;
        StepOutcome step;
        try {
            step = implicit_step(system, mass, out.field.level(from), config.gmres);
        } catch (const SolverError& e) {
            std::ostringstream os;
            os << (backward ? "backward" : "forward") << " step to level " << to << ": " << e.what();
            throw SolverError(os.str());
        }
        auto dst = out.field.level(to);
        std::copy(step.values.begin(), step.values.end(), dst.begin());
        apply_floor(dst, config.positivity_floor);
        out.gmres_iterations[to] = step.gmres_iterations;
    }
    return out;
}

} // namespace

SweepResult sweep_backward(const SystemMatrices& systems, const CsrMatrix& mass, std::span<const double> terminal,
                           const SolverConfig& config) {
    return sweep(systems.backward(), mass, terminal, config, true);
}

SweepResult sweep_forward(const SystemMatrices& systems, const CsrMatrix& mass, std::span<const double> initial,
                          const SolverConfig& config) {
    return sweep(systems.forward, mass, initial, config, false);
}

double BridgeSolution::mean_gmres_iterations() const {
    if (gmres.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (const auto& r : gmres) {
        s += r.gmres_iterations;
    }
    return s / static_cast<double>(gmres.size());
}

BridgeSolution fixed_point_solve(const AssembledOperators& ops, const SystemMatrices& systems,
                                 const SolverConfig& config, std::span<const double> rho0,
                                 std::span<const double> rho1) {
    config.validate();
    const std::size_t n = ops.lumped_mass.size();
    if (rho0.size() != n || rho1.size() != n) {
        throw std::invalid_argument("fixed_point_solve: density length does not match the mesh");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(rho0[i] >= 0.0) || !(rho1[i] >= 0.0)) {
            throw ConfigError("endpoint densities must be non-negative and finite");
        }
    }

    const double floor = config.positivity_floor;
    const int k_steps = config.time_steps;
    const auto& w = ops.lumped_mass;

    BridgeSolution sol;
    sol.epsilon = config.epsilon;
    sol.positivity_floor = floor;

    NodalField terminal_prev(n, config.initial_terminal_scale);
    const double gauge_norm = lumped_l2_norm(w, terminal_prev);
    NodalField buffer(n);

    for (int m = 0; m < config.max_fixed_point_iters; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            buffer[i] = rho1[i] / std::max(terminal_prev[i], floor);
        }
        SweepResult back = sweep_backward(systems, ops.mass, buffer, config);

        const auto phi0 = back.field.level(0);
        for (std::size_t i = 0; i < n; ++i) {
            buffer[i] = rho0[i] / std::max(phi0[i], floor);
        }
        SweepResult fwd = sweep_forward(systems, ops.mass, buffer, config);

        SpaceTimeField rho(k_steps, n);
        {
            const auto& a = back.field.data();
            const auto& b = fwd.field.data();
            auto& r = rho.data();
            for (std::size_t i = 0; i < r.size(); ++i) {
                r[i] = a[i] * b[i];
            }
        }

        const auto raw_terminal = fwd.field.level(k_steps);
        NodalField terminal(raw_terminal.begin(), raw_terminal.end());
        double factor = 1.0;
        if (config.gauge == GaugeFix::norm) {
            const double current = lumped_l2_norm(w, terminal);
            if (current > 0.0) {
                factor = gauge_norm / current;
                for (double& v : terminal) {
                    v *= factor;
                }
            }
        }
        sol.gauge_factors.push_back(factor);
        const double error = lumped_l2_distance(w, terminal, terminal_prev);
        sol.errors.push_back(error);
        sol.terminal_mismatch.push_back(lumped_l2_distance(w, rho.level(k_steps), rho1));
        for (int k = 0; k < k_steps; ++k) {
            sol.gmres.push_back({m, k, "backward", back.gmres_iterations[k]});
        }
        for (int k = 1; k <= k_steps; ++k) {
            sol.gmres.push_back({m, k, "forward", fwd.gmres_iterations[k]});
        }
        if (config.record_terminal_history) {
            sol.terminal_history.push_back(terminal);
        }
        terminal_prev = std::move(terminal);

        sol.phi = std::move(back.field);
        sol.phi_hat = std::move(fwd.field);
        sol.rho = std::move(rho);
        sol.iterations_used = m + 1;
        if (error < config.fixed_point_tol) {
            sol.converged = true;
            break;
        }
    }
    return sol;
}

BridgeSolution fixed_point_solve(const SimplexMesh& mesh, const AssembledOperators& ops, const SolverConfig& config,
                                 std::span<const double> rho0, std::span<const double> rho1) {
    if (ops.lumped_mass.size() != mesh.vertex_count()) {
        throw std::invalid_argument("fixed_point_solve: operators were not assembled on this mesh");
    }
    const SystemMatrices systems = build_system_matrix(ops, config);
    return fixed_point_solve(ops, systems, config, rho0, rho1);
}

std::vector<double> mass_history(const BridgeSolution& solution, std::span<const double> weights) {
    std::vector<double> out;
    out.reserve(solution.rho.levels());
    for (int k = 0; k < solution.rho.levels(); ++k) {
        out.push_back(lumped_integral(weights, solution.rho.level(k)));
    }
    return out;
}

double mass_error(std::span<const double> history) {
    double e = 0.0;
    for (double m : history) {
        e = std::max(e, std::abs(m - 1.0));
    }
    return e;
}

std::optional<Vec3> recover_control(const BridgeSolution& solution, const PointLocator& locator, const Vec3& x,
                                    double t) {
    const auto loc = locator.locate(x);
    if (!loc) {
        return std::nullopt;
    }
    const int k_steps = solution.time_steps();
    const double s = std::clamp(t, 0.0, 1.0) * k_steps;
    const int k = std::min(static_cast<int>(std::floor(s)), k_steps - 1);
    const double theta = s - k;
    const auto lo = solution.phi.level(k);
    const auto hi = solution.phi.level(k + 1);

    const Tet& tet = locator.mesh().tets[loc->element];
    const ElementGeometry& g = locator.geometry(loc->element);
    Vec3 grad;
    double value = 0.0;
    for (int q = 0; q < 4; ++q) {
        const double phi = (1.0 - theta) * lo[tet[q]] + theta * hi[tet[q]];
        grad += phi * g.gradients[q];
        value += loc->barycentric[q] * phi;
    }
    return grad * (solution.epsilon / std::max(value, solution.positivity_floor));
}

std::vector<Vec3> element_control(const BridgeSolution& solution, const SimplexMesh& mesh, int level) {
    const auto phi = solution.phi.level(level);
    std::vector<Vec3> out(mesh.element_count());
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const ElementGeometry g = element_geometry(mesh, e);
        Vec3 grad;
        double mean = 0.0;
        for (int q = 0; q < 4; ++q) {
            const double v = phi[mesh.tets[e][q]];
            grad += v * g.gradients[q];
            mean += 0.25 * v;
        }
        out[e] = grad * (solution.epsilon / std::max(mean, solution.positivity_floor));
    }
    return out;
}

NodalVectorField nodal_control(const BridgeSolution& solution, const SimplexMesh& mesh, int level) {
    const std::vector<Vec3> element = element_control(solution, mesh, level);
    NodalVectorField out(mesh.vertex_count());
    std::vector<double> weight(mesh.vertex_count(), 0.0);
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const double vol = element_geometry(mesh, e).volume;
        for (int v : mesh.tets[e]) {
            out[v] += vol * element[e];
            weight[v] += vol;
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = out[i] / weight[i];
    }
    return out;
}

double control_l2_norm(const BridgeSolution& solution, const SimplexMesh& mesh) {
    const int k_steps = solution.time_steps();
    const double dt = 1.0 / k_steps;
    std::vector<double> volume(mesh.element_count());
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        volume[e] = element_geometry(mesh, e).volume;
    }
    double total = 0.0;
    for (int k = 0; k <= k_steps; ++k) {
        const double wt = (k == 0 || k == k_steps) ? 0.5 * dt : dt;
        const auto u = element_control(solution, mesh, k);
        double s = 0.0;
        for (std::size_t e = 0; e < u.size(); ++e) {
            s += volume[e] * dot(u[e], u[e]);
        }
        total += wt * s;
    }
    return std::sqrt(total);
}

NodalField value_function(const BridgeSolution& solution, int level) {
    const auto phi = solution.phi.level(level);
    NodalField out(phi.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = solution.epsilon * std::log(phi[i]);
    }
    return out;
}

} // namespace rsb
