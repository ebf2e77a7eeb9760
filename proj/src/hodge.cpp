#include "rsb/hodge.hpp"

#include <cmath>
#include <numeric>

#include "rsb/errors.hpp"

namespace rsb {

namespace {

double norm2(std::span<const double> a) {
    return std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
}

// ||r|| / ||s|| with s_i = sum_e V_e |v_e| |grad phi_i|.
double normalised_residual(const SimplexMesh& mesh, std::span<const Vec3> element, std::span<const double> r) {
    std::vector<double> scale(mesh.vertex_count(), 0.0);
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const ElementGeometry g = element_geometry(mesh, e);
        const double speed = norm(element[e]);
        for (int q = 0; q < 4; ++q) {
            scale[mesh.tets[e][q]] += g.volume * speed * norm(g.gradients[q]);
        }
    }
    const double s = norm2(scale);
    return s > 0.0 ? norm2(r) / s : 0.0;
}

NodalVectorField nodal_average(const SimplexMesh& mesh, std::span<const Vec3> element) {
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

struct PotentialSolve {
    NodalField potential;
    std::vector<Vec3> gradient;
    int iterations = 0;
};

// Find psi with L psi = b, b_i = int V . grad phi_i, lumped mean of psi zero.
PotentialSolve solve_potential(const SimplexMesh& mesh, const AssembledOperators& ops,
                               std::span<const Vec3> element_field, const GmresSettings& settings) {
    std::vector<double> b = weak_divergence_elementwise(mesh, element_field);
    const int n = static_cast<int>(b.size());
    double abs_sum = 0.0;
    for (double v : b) {
        abs_sum += std::abs(v);
    }

    PotentialSolve out;
    out.potential.assign(n, 0.0);
    out.gradient.assign(mesh.element_count(), Vec3{});
    if (abs_sum == 0.0) {
        return out;
    }

    // Constants span the left null space of L; remove that component from b.
    const double mean = std::accumulate(b.begin(), b.end(), 0.0) / n;
    for (double& v : b) {
        v -= mean;
    }
    const double compat = std::accumulate(b.begin(), b.end(), 0.0);
    if (std::abs(compat) > 1e-10 * abs_sum) {
        throw SolverError("divergence projection: right-hand side is not compatible with the Neumann problem");
    }

    // The shifted matrix only serves as a preconditioner; GMRES runs on L itself.
    const auto& w = ops.lumped_mass;
    double diag_l = 0.0;
    double sum_w = 0.0;
    for (int i = 0; i < n; ++i) {
        diag_l += ops.stiffness.at(i, i);
        sum_w += w[i];
    }
    const double shift = 1e-3 * diag_l / sum_w;
    CsrMatrix shifted = ops.stiffness;
    for (int i = 0; i < n; ++i) {
        shifted.add(i, i, shift * w[i]);
    }
    const Ilu0Preconditioner ilu(shifted);
    GmresResult solve = gmres(ops.stiffness, b, ilu, settings);
    if (!solve.converged) {
        throw SolverError("divergence projection: GMRES did not converge (relative residual " +
                          std::to_string(solve.residual) + ")");
    }
    out.iterations = solve.iterations;

    const double psi_mean = lumped_integral(w, solve.x) / sum_w;
    for (double& v : solve.x) {
        v -= psi_mean;
    }
    out.potential = std::move(solve.x);
    out.gradient = element_gradient(mesh, out.potential);
    return out;
}

} // namespace

std::vector<Vec3> element_average(const SimplexMesh& mesh, std::span<const Vec3> nodal) {
    std::vector<Vec3> out(mesh.element_count());
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const Tet& t = mesh.tets[e];
        out[e] = (nodal[t[0]] + nodal[t[1]] + nodal[t[2]] + nodal[t[3]]) * 0.25;
    }
    return out;
}

std::vector<double> weak_divergence_elementwise(const SimplexMesh& mesh, std::span<const Vec3> element) {
    if (element.size() != mesh.element_count()) {
        throw std::invalid_argument("weak_divergence: one vector per element expected");
    }
    std::vector<double> r(mesh.vertex_count(), 0.0);
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const ElementGeometry g = element_geometry(mesh, e);
        for (int q = 0; q < 4; ++q) {
            r[mesh.tets[e][q]] += g.volume * dot(element[e], g.gradients[q]);
        }
    }
    return r;
}

std::vector<double> weak_divergence(const SimplexMesh& mesh, std::span<const Vec3> nodal) {
    if (nodal.size() != mesh.vertex_count()) {
        throw std::invalid_argument("weak_divergence: one vector per vertex expected");
    }
    // grad phi_i is constant per element, so the P1 integral only needs the element mean.
    return weak_divergence_elementwise(mesh, element_average(mesh, nodal));
}

double weak_divergence_residual(const SimplexMesh& mesh, const AssembledOperators&, std::span<const Vec3> nodal) {
    const auto element = element_average(mesh, nodal);
    return normalised_residual(mesh, element, weak_divergence_elementwise(mesh, element));
}

double weak_divergence_residual_elementwise(const SimplexMesh& mesh, std::span<const Vec3> element) {
    return normalised_residual(mesh, element, weak_divergence_elementwise(mesh, element));
}

double tangency_residual(const SimplexMesh& mesh, std::span<const Vec3> nodal) {
    double normal_sq = 0.0;
    double total_sq = 0.0;
    for (const BoundaryFace& f : mesh.boundary_faces) {
        const Vec3 v = (nodal[f.vertices[0]] + nodal[f.vertices[1]] + nodal[f.vertices[2]]) / 3.0;
        const double vn = dot(v, f.normal);
        normal_sq += f.area * vn * vn;
        total_sq += f.area * dot(v, v);
    }
    return total_sq > 0.0 ? std::sqrt(normal_sq / total_sq) : 0.0;
}

std::vector<Vec3> element_gradient(const SimplexMesh& mesh, std::span<const double> field) {
    std::vector<Vec3> out(mesh.element_count());
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const ElementGeometry g = element_geometry(mesh, e);
        Vec3 grad;
        for (int q = 0; q < 4; ++q) {
            grad += field[mesh.tets[e][q]] * g.gradients[q];
        }
        out[e] = grad;
    }
    return out;
}

NodalVectorField recover_nodal_gradient(const SimplexMesh& mesh, std::span<const double> field) {
    return nodal_average(mesh, element_gradient(mesh, field));
}

DriftField project_divergence_free(const SimplexMesh& mesh, const AssembledOperators& ops,
                                   std::span<const Vec3> nodal_field, const GmresSettings& gmres_settings) {
    if (nodal_field.size() != mesh.vertex_count()) {
        throw std::invalid_argument("project_divergence_free: one vector per vertex expected");
    }
    const std::vector<Vec3> element_in = element_average(mesh, nodal_field);
    PotentialSolve solve = solve_potential(mesh, ops, element_in, gmres_settings);

    DriftField out;
    out.input_divergence_residual = weak_divergence_residual_elementwise(mesh, element_in);
    out.element_values.resize(mesh.element_count());
    for (std::size_t e = 0; e < element_in.size(); ++e) {
        out.element_values[e] = element_in[e] - solve.gradient[e];
    }
    const NodalVectorField nodal_grad = nodal_average(mesh, solve.gradient);
    out.values.resize(mesh.vertex_count());
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = nodal_field[i] - nodal_grad[i];
    }
    out.potential = std::move(solve.potential);
    out.gmres_iterations = solve.iterations;
    out.divergence_residual = weak_divergence_residual(mesh, ops, out.values);
    out.element_divergence_residual = weak_divergence_residual_elementwise(mesh, out.element_values);
    out.tangency_residual = tangency_residual(mesh, out.values);
    return out;
}

DriftField project_divergence_free_elementwise(const SimplexMesh& mesh, const AssembledOperators& ops,
                                               std::span<const Vec3> element_field,
                                               const GmresSettings& gmres_settings) {
    if (element_field.size() != mesh.element_count()) {
        throw std::invalid_argument("project_divergence_free_elementwise: one vector per element expected");
    }
    PotentialSolve solve = solve_potential(mesh, ops, element_field, gmres_settings);

    DriftField out;
    out.input_divergence_residual = weak_divergence_residual_elementwise(mesh, element_field);
    out.element_values.resize(mesh.element_count());
    for (std::size_t e = 0; e < element_field.size(); ++e) {
        out.element_values[e] = element_field[e] - solve.gradient[e];
    }
    out.values = nodal_average(mesh, out.element_values);
    out.potential = std::move(solve.potential);
    out.gmres_iterations = solve.iterations;
    out.divergence_residual = weak_divergence_residual(mesh, ops, out.values);
    out.element_divergence_residual = weak_divergence_residual_elementwise(mesh, out.element_values);
    out.tangency_residual = tangency_residual(mesh, out.values);
    return out;
}

double element_l2_norm(const SimplexMesh& mesh, std::span<const Vec3> element) {
    double s = 0.0;
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        s += element_geometry(mesh, e).volume * dot(element[e], element[e]);
    }
    return std::sqrt(s);
}

double nodal_l2_norm(std::span<const double> weights, std::span<const Vec3> nodal) {
    double s = 0.0;
    for (std::size_t i = 0; i < nodal.size(); ++i) {
        s += weights[i] * dot(nodal[i], nodal[i]);
    }
    return std::sqrt(s);
}

} // namespace rsb
