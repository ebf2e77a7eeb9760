#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsb/geometry.hpp"
#include "rsb/vec3.hpp"

namespace rsb {

using Tet = std::array<int, 4>;

struct BoundaryFace {
    std::array<int, 3> vertices;
    Vec3 normal; // outward unit normal
    double area = 0.0;
    int tet = -1; // owning element
};

/// Tetrahedral mesh cut out of a structured box grid. Every vertex remembers its
/// lattice coordinates so meshes at nested resolutions can be matched node-by-node.
struct SimplexMesh {
    std::vector<Vec3> vertices;
    std::vector<Tet> tets;
    std::vector<BoundaryFace> boundary_faces;
    std::vector<std::array<int, 3>> lattice;
    int resolution = 0;
    Box bounds;

    std::size_t vertex_count() const noexcept { return vertices.size(); }
    std::size_t element_count() const noexcept { return tets.size(); }
    double cell_size() const noexcept { return (bounds.upper.x - bounds.lower.x) / resolution; }
};

struct ElementGeometry {
    double volume = 0.0;
    std::array<Vec3, 4> gradients; // constant gradients of the barycentric basis
};

/// Kuhn (6-tet) split of an N^3 grid over `bounds`; a tet is kept when its centroid is
/// strictly inside the SDF. Only the largest vertex-connected component survives.
SimplexMesh generate_masked_mesh(int resolution, const Sdf& sdf, const Box& bounds = {});

ElementGeometry tet_geometry(const std::array<Vec3, 4>& corners);
ElementGeometry element_geometry(const SimplexMesh& mesh, std::size_t element);
std::vector<ElementGeometry> all_element_geometry(const SimplexMesh& mesh);

double mesh_volume(const SimplexMesh& mesh);

struct Location {
    int element = -1;
    std::array<double, 4> barycentric{};
};

/// Bucket grid over element bounding boxes. Holds a reference to the mesh, which must
/// outlive the locator.
class PointLocator {
public:
    explicit PointLocator(const SimplexMesh& mesh);

    const SimplexMesh& mesh() const noexcept { return mesh_; }
    const ElementGeometry& geometry(int element) const { return geometry_[element]; }

    std::optional<Location> locate(const Vec3& x) const;
    std::optional<double> interpolate(std::span<const double> nodal, const Vec3& x) const;
    std::optional<Vec3> interpolate(std::span<const Vec3> nodal, const Vec3& x) const;

private:
    std::array<double, 4> barycentric(int element, const Vec3& x) const;

    const SimplexMesh& mesh_;
    std::vector<ElementGeometry> geometry_;
    Vec3 origin_;
    double bucket_size_ = 1.0;
    std::array<int, 3> dims_{1, 1, 1};
    std::vector<int> bucket_offsets_;
    std::vector<int> bucket_elements_;
};

std::optional<Location> locate_element(const SimplexMesh& mesh, const Vec3& x);
std::optional<double> interpolate(const SimplexMesh& mesh, std::span<const double> nodal, const Vec3& x);

} // namespace rsb
