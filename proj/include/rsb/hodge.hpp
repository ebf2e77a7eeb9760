#pragma once

#include <span>
#include <vector>

#include "rsb/fem.hpp"
#include "rsb/mesh.hpp"
#include "rsb/sparse.hpp"

namespace rsb {

/// Output of the divergence-free projection.
///
/// The projection itself is exact on the piecewise-constant representation
/// (`element_values`): it is the L2-orthogonal complement of the element gradients of
/// P1 functions, so it is idempotent and never increases the L2 norm. `values` holds
/// the nodal field obtained by subtracting the volume-averaged nodal gradient of the
/// potential from the nodal input; it is what the convection matrix and the particle
/// drift consume, and it is only divergence-free up to O(h).
struct DriftField {
    NodalVectorField values;
    std::vector<Vec3> element_values;
    NodalField potential; // lumped mean zero
    double input_divergence_residual = 0.0;
    double divergence_residual = 0.0;         // nodal field
    double element_divergence_residual = 0.0; // piecewise-constant field
    double tangency_residual = 0.0;
    int gmres_iterations = 0;
};

std::vector<Vec3> element_average(const SimplexMesh& mesh, std::span<const Vec3> nodal);

/// r_i = int v . grad phi_i over the mesh, for nodal (P1) or element-constant v.
std::vector<double> weak_divergence(const SimplexMesh& mesh, std::span<const Vec3> nodal);
std::vector<double> weak_divergence_elementwise(const SimplexMesh& mesh, std::span<const Vec3> element);

/// ||r|| normalised by the same sum taken over |v| |grad phi_i|, so the value is
/// dimensionless and lies in [0, 1]. Zero for v = 0.
double weak_divergence_residual(const SimplexMesh& mesh, const AssembledOperators& ops, std::span<const Vec3> nodal);
double weak_divergence_residual_elementwise(const SimplexMesh& mesh, std::span<const Vec3> element);

/// Area-weighted RMS of v.n over boundary faces relative to the RMS of |v| there.
double tangency_residual(const SimplexMesh& mesh, std::span<const Vec3> nodal);

std::vector<Vec3> element_gradient(const SimplexMesh& mesh, std::span<const double> field);
NodalVectorField recover_nodal_gradient(const SimplexMesh& mesh, std::span<const double> field);

DriftField project_divergence_free(const SimplexMesh& mesh, const AssembledOperators& ops,
                                   std::span<const Vec3> nodal_field, const GmresSettings& gmres_settings = {});

/// Projection of an element-constant field; `values` is then the volume-weighted nodal
/// average of the projected elements.
DriftField project_divergence_free_elementwise(const SimplexMesh& mesh, const AssembledOperators& ops,
                                               std::span<const Vec3> element_field,
                                               const GmresSettings& gmres_settings = {});

double element_l2_norm(const SimplexMesh& mesh, std::span<const Vec3> element);
double nodal_l2_norm(std::span<const double> weights, std::span<const Vec3> nodal);

} // namespace rsb
