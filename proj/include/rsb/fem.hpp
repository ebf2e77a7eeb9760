#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rsb/geometry.hpp"
#include "rsb/mesh.hpp"
#include "rsb/sparse.hpp"

namespace rsb {

/// Nodal values of a scalar P1 field.
using NodalField = std::vector<double>;
/// Nodal values of a vector P1 field.
using NodalVectorField = std::vector<Vec3>;

struct AssembledOperators {
    CsrMatrix mass;
    CsrMatrix stiffness;
    std::optional<CsrMatrix> convection;
    std::vector<double> lumped_mass;
};

/// Empty matrix on the vertex adjacency pattern of the mesh (diagonal included).
CsrMatrix mesh_pattern(const SimplexMesh& mesh);

CsrMatrix assemble_mass(const SimplexMesh& mesh);
CsrMatrix assemble_stiffness(const SimplexMesh& mesh);

/// C_ij = int (grad phi_j . v) phi_i with v taken at the element centroid (mean of the
/// four nodal vectors).
CsrMatrix assemble_convection(const SimplexMesh& mesh, std::span<const Vec3> nodal_velocity);
/// Same rule with one constant velocity per element.
CsrMatrix assemble_convection_elementwise(const SimplexMesh& mesh, std::span<const Vec3> element_velocity);

/// Row sums of the consistent mass matrix, V/4 per element corner.
std::vector<double> lumped_mass(const SimplexMesh& mesh);

AssembledOperators assemble_operators(const SimplexMesh& mesh);

/// Gaussian evaluated at the nodes, rescaled so its lumped integral is exactly one.
NodalField project_density(const SimplexMesh& mesh, std::span<const double> weights, const GaussianSpec& spec);

double lumped_integral(std::span<const double> weights, std::span<const double> field);
double lumped_l2_norm(std::span<const double> weights, std::span<const double> field);
double lumped_l2_distance(std::span<const double> weights, std::span<const double> a, std::span<const double> b);

/// ||C + C^T||_F / ||C||_F.
double skewness_defect(const CsrMatrix& c);

} // namespace rsb
