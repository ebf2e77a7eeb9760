#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rsb/bridge.hpp"
#include "rsb/mesh.hpp"

namespace rsb {

struct PointScalars {
    std::string name;
    std::span<const double> values;
};

struct PointVectors {
    std::string name;
    std::span<const Vec3> values;
};

/// Legacy ASCII VTK unstructured grid, tetrahedra as cell type 10, optional point data.
void write_vtk(const std::filesystem::path& path, const SimplexMesh& mesh, const std::vector<PointScalars>& scalars = {},
               const std::vector<PointVectors>& vectors = {}, const std::string& title = "rsbridge");

/// `iter,error`
void write_fixed_point_csv(const std::filesystem::path& path, const BridgeSolution& solution);
/// `k,t,mass`
void write_mass_csv(const std::filesystem::path& path, std::span<const double> masses);
/// `k,direction,gmres_iters` for the last fixed-point iterate.
void write_gmres_csv(const std::filesystem::path& path, const BridgeSolution& solution);

/// Binary dump of phi and phi_hat (rho is rebuilt on load). Native byte order.
void save_solution(const std::filesystem::path& path, const BridgeSolution& solution);
BridgeSolution load_solution(const std::filesystem::path& path);

/// Whitespace-separated `vx vy vz` per line, one line per mesh vertex.
void save_nodal_vectors(const std::filesystem::path& path, std::span<const Vec3> values);
NodalVectorField load_nodal_vectors(const std::filesystem::path& path);

} // namespace rsb
