#include "rsb/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include "rsb/errors.hpp"

namespace rsb {

namespace {

constexpr std::array<std::array<int, 3>, 6> kKuhnPermutations{{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
}};

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return dot(b - a, cross(c - a, d - a)) / 6.0;
}

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    int find(int i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent_[std::max(a, b)] = std::min(a, b);
        }
    }

private:
    std::vector<int> parent_;
};

struct FaceRecord {
    std::array<int, 3> sorted;
    int tet;
    int local; // index of the opposite vertex inside the tet
};

void extract_boundary(SimplexMesh& mesh) {
    std::vector<FaceRecord> faces;
    faces.reserve(mesh.tets.size() * 4);
    for (int e = 0; e < static_cast<int>(mesh.tets.size()); ++e) {
        const Tet& t = mesh.tets[e];
        for (int l = 0; l < 4; ++l) {
            std::array<int, 3> f{};
            int m = 0;
            for (int q = 0; q < 4; ++q) {
                if (q != l) {
                    f[m++] = t[q];
                }
            }
            std::sort(f.begin(), f.end());
            faces.push_back({f, e, l});
        }
    }
    std::sort(faces.begin(), faces.end(), [](const FaceRecord& a, const FaceRecord& b) {
        return a.sorted != b.sorted ? a.sorted < b.sorted : a.tet < b.tet;
    });

    mesh.boundary_faces.clear();
    for (std::size_t i = 0; i < faces.size();) {
        std::size_t j = i + 1;
        while (j < faces.size() && faces[j].sorted == faces[i].sorted) {
            ++j;
        }
        if (j - i > 2) {
            throw MeshError("non-manifold face shared by more than two tetrahedra");
        }
        if (j - i == 1) {
            const FaceRecord& rec = faces[i];
            const Tet& t = mesh.tets[rec.tet];
            std::array<int, 3> v = rec.sorted;
            const Vec3& a = mesh.vertices[v[0]];
            const Vec3& b = mesh.vertices[v[1]];
            const Vec3& c = mesh.vertices[v[2]];
            Vec3 n = cross(b - a, c - a);
            if (dot(n, mesh.vertices[t[rec.local]] - a) > 0.0) {
                n = -n;
                std::swap(v[1], v[2]);
            }
            const double len = norm(n);
            mesh.boundary_faces.push_back({v, n / len, 0.5 * len, rec.tet});
        }
        i = j;
    }
}

} // namespace

SimplexMesh generate_masked_mesh(int resolution, const Sdf& sdf, const Box& bounds) {
    if (resolution < 1) {
        throw ConfigError("mesh resolution must be positive");
    }
    const int n = resolution;
    const int np = n + 1;
    const Vec3 extent = bounds.upper - bounds.lower;
    const Vec3 h{extent.x / n, extent.y / n, extent.z / n};
    const double half_diagonal = 0.5 * norm(h) * 1.01;

    auto lattice_id = [np](int i, int j, int k) { return i + np * (j + np * k); };
    auto lattice_point = [&](int i, int j, int k) {
        return Vec3{bounds.lower.x + i * h.x, bounds.lower.y + j * h.y, bounds.lower.z + k * h.z};
    };

    std::vector<Tet> kept;
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const Vec3 base = lattice_point(i, j, k);
                const double center_d = sdf(base + 0.5 * h);
                // 1-Lipschitz SDF: whole cell decided by its centre when far from the wall.
                const bool all_out = center_d > half_diagonal;
                const bool all_in = center_d < -half_diagonal;
                if (all_out) {
                    continue;
                }
                for (const auto& perm : kKuhnPermutations) {
                    std::array<int, 3> c{0, 0, 0};
                    Tet tet{};
                    Vec3 centroid = base;
                    tet[0] = lattice_id(i, j, k);
                    for (int step = 0; step < 3; ++step) {
                        c[perm[step]] = 1;
                        tet[step + 1] = lattice_id(i + c[0], j + c[1], k + c[2]);
                    }
                    // Kuhn path corners: (0,0,0), e_p0, e_p0+e_p1, (1,1,1).
                    const Vec3 e0{perm[0] == 0 ? h.x : 0.0, perm[0] == 1 ? h.y : 0.0, perm[0] == 2 ? h.z : 0.0};
                    const Vec3 e1{perm[1] == 0 ? h.x : 0.0, perm[1] == 1 ? h.y : 0.0, perm[1] == 2 ? h.z : 0.0};
                    centroid += (2.0 * e0 + e1 + h) * 0.25;
                    if (all_in || sdf(centroid) < 0.0) {
                        kept.push_back(tet);
                    }
                }
            }
        }
    }

    if (kept.empty()) {
        std::ostringstream os;
        os << "masked mesh is empty at resolution " << n << "; the grid is too coarse for the domain";
        throw ConfigError(os.str());
    }

    const std::size_t lattice_count = static_cast<std::size_t>(np) * np * np;
    std::vector<int> remap(lattice_count, -1);
    for (const Tet& t : kept) {
        for (int v : t) {
            remap[v] = 0;
        }
    }
    int count = 0;
    for (auto& r : remap) {
        if (r == 0) {
            r = count++;
        }
    }

    DisjointSets sets(count);
    for (const Tet& t : kept) {
        for (int q = 1; q < 4; ++q) {
            sets.unite(remap[t[0]], remap[t[q]]);
        }
    }
    std::vector<int> tets_per_root(count, 0);
    for (const Tet& t : kept) {
        ++tets_per_root[sets.find(remap[t[0]])];
    }
    const int largest = static_cast<int>(
        std::max_element(tets_per_root.begin(), tets_per_root.end()) - tets_per_root.begin());

    SimplexMesh mesh;
    mesh.resolution = n;
    mesh.bounds = bounds;
    std::vector<int> final_id(lattice_count, -1);
    for (const Tet& t : kept) {
        if (sets.find(remap[t[0]]) != largest) {
            continue;
        }
        Tet out{};
        for (int q = 0; q < 4; ++q) {
            int& id = final_id[t[q]];
            if (id < 0) {
                id = static_cast<int>(mesh.vertices.size());
                const int li = t[q] % np;
                const int lj = (t[q] / np) % np;
                const int lk = t[q] / (np * np);
                mesh.vertices.push_back(lattice_point(li, lj, lk));
                mesh.lattice.push_back({li, lj, lk});
            }
            out[q] = id;
        }
        const auto& x = mesh.vertices;
        if (signed_volume(x[out[0]], x[out[1]], x[out[2]], x[out[3]]) < 0.0) {
            std::swap(out[2], out[3]);
        }
        mesh.tets.push_back(out);
    }

    extract_boundary(mesh);
    return mesh;
}

ElementGeometry tet_geometry(const std::array<Vec3, 4>& corners) {
    const Vec3 a = corners[1] - corners[0];
    const Vec3 b = corners[2] - corners[0];
    const Vec3 c = corners[3] - corners[0];
    const double det = dot(a, cross(b, c));
    ElementGeometry g;
    g.volume = std::abs(det) / 6.0;
    if (!(g.volume >= 1e-14)) {
        throw MeshError("degenerate tetrahedron (volume below 1e-14)");
    }
    // Rows of the inverse edge matrix are the gradients of lambda_1..lambda_3.
    g.gradients[1] = cross(b, c) / det;
    g.gradients[2] = cross(c, a) / det;
    g.gradients[3] = cross(a, b) / det;
    g.gradients[0] = -(g.gradients[1] + g.gradients[2] + g.gradients[3]);
    return g;
}

ElementGeometry element_geometry(const SimplexMesh& mesh, std::size_t element) {
    const Tet& t = mesh.tets.at(element);
    return tet_geometry({mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], mesh.vertices[t[3]]});
}

std::vector<ElementGeometry> all_element_geometry(const SimplexMesh& mesh) {
    std::vector<ElementGeometry> out;
    out.reserve(mesh.tets.size());
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        out.push_back(element_geometry(mesh, e));
    }
    return out;
}

double mesh_volume(const SimplexMesh& mesh) {
    double v = 0.0;
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        v += element_geometry(mesh, e).volume;
    }
    return v;
}

PointLocator::PointLocator(const SimplexMesh& mesh) : mesh_(mesh), geometry_(all_element_geometry(mesh)) {
    Vec3 lo = mesh.vertices.front();
    Vec3 hi = lo;
    for (const Vec3& v : mesh.vertices) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], v[a]);
            hi[a] = std::max(hi[a], v[a]);
        }
    }
    origin_ = lo;
    bucket_size_ = mesh.resolution > 0 ? mesh.cell_size() : std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z, 1e-12});
    for (int a = 0; a < 3; ++a) {
        dims_[a] = std::max(1, static_cast<int>(std::ceil((hi[a] - lo[a]) / bucket_size_)) + 1);
    }
    const std::size_t buckets = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];

    auto bucket_range = [&](const Tet& t, std::array<int, 3>& b0, std::array<int, 3>& b1) {
        for (int a = 0; a < 3; ++a) {
            double mn = mesh.vertices[t[0]][a];
            double mx = mn;
            for (int q = 1; q < 4; ++q) {
                mn = std::min(mn, mesh.vertices[t[q]][a]);
                mx = std::max(mx, mesh.vertices[t[q]][a]);
            }
            b0[a] = std::clamp(static_cast<int>(std::floor((mn - origin_[a]) / bucket_size_ - 1e-9)), 0, dims_[a] - 1);
            b1[a] = std::clamp(static_cast<int>(std::floor((mx - origin_[a]) / bucket_size_ + 1e-9)), 0, dims_[a] - 1);
        }
    };
    auto bucket_index = [&](int i, int j, int k) {
        return static_cast<std::size_t>(i) + dims_[0] * (static_cast<std::size_t>(j) + dims_[1] * k);
    };

    std::vector<int> counts(buckets + 1, 0);
    for (const Tet& t : mesh.tets) {
        std::array<int, 3> b0{}, b1{};
        bucket_range(t, b0, b1);
        for (int k = b0[2]; k <= b1[2]; ++k)
            for (int j = b0[1]; j <= b1[1]; ++j)
                for (int i = b0[0]; i <= b1[0]; ++i)
                    ++counts[bucket_index(i, j, k) + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    bucket_offsets_ = counts;
    bucket_elements_.resize(counts.back());
    std::vector<int> cursor(counts.begin(), counts.end() - 1);
    for (int e = 0; e < static_cast<int>(mesh.tets.size()); ++e) {
        std::array<int, 3> b0{}, b1{};
        bucket_range(mesh.tets[e], b0, b1);
        for (int k = b0[2]; k <= b1[2]; ++k)
            for (int j = b0[1]; j <= b1[1]; ++j)
                for (int i = b0[0]; i <= b1[0]; ++i)
                    bucket_elements_[cursor[bucket_index(i, j, k)]++] = e;
    }
}

std::array<double, 4> PointLocator::barycentric(int element, const Vec3& x) const {
    const Tet& t = mesh_.tets[element];
    const ElementGeometry& g = geometry_[element];
    const Vec3 d = x - mesh_.vertices[t[0]];
    std::array<double, 4> lambda{};
    lambda[1] = dot(g.gradients[1], d);
    lambda[2] = dot(g.gradients[2], d);
    lambda[3] = dot(g.gradients[3], d);
    lambda[0] = 1.0 - lambda[1] - lambda[2] - lambda[3];
    return lambda;
}

std::optional<Location> PointLocator::locate(const Vec3& x) const {
    std::array<int, 3> b{};
    for (int a = 0; a < 3; ++a) {
        const double s = (x[a] - origin_[a]) / bucket_size_;
        if (!(s >= -1e-9) || s > dims_[a] + 1e-9) {
            return std::nullopt;
        }
        b[a] = std::clamp(static_cast<int>(std::floor(s)), 0, dims_[a] - 1);
    }
    const std::size_t idx = static_cast<std::size_t>(b[0]) + dims_[0] * (static_cast<std::size_t>(b[1]) + dims_[1] * b[2]);
    constexpr double tolerance = -1e-10;
    Location best;
    double best_min = -std::numeric_limits<double>::infinity();
    for (int p = bucket_offsets_[idx]; p < bucket_offsets_[idx + 1]; ++p) {
        const int e = bucket_elements_[p];
        const auto lambda = barycentric(e, x);
        const double mn = *std::min_element(lambda.begin(), lambda.end());
        if (mn > best_min) {
            best_min = mn;
            best.element = e;
            best.barycentric = lambda;
            if (mn >= 0.0) {
                break;
            }
        }
    }
    if (best.element < 0 || best_min < tolerance) {
        return std::nullopt;
    }
    return best;
}

std::optional<double> PointLocator::interpolate(std::span<const double> nodal, const Vec3& x) const {
    const auto loc = locate(x);
    if (!loc) {
        return std::nullopt;
    }
    const Tet& t = mesh_.tets[loc->element];
    double v = 0.0;
    for (int q = 0; q < 4; ++q) {
        v += loc->barycentric[q] * nodal[t[q]];
    }
    return v;
}

std::optional<Vec3> PointLocator::interpolate(std::span<const Vec3> nodal, const Vec3& x) const {
    const auto loc = locate(x);
    if (!loc) {
        return std::nullopt;
    }
    const Tet& t = mesh_.tets[loc->element];
    Vec3 v;
    for (int q = 0; q < 4; ++q) {
        v += loc->barycentric[q] * nodal[t[q]];
    }
    return v;
}

std::optional<Location> locate_element(const SimplexMesh& mesh, const Vec3& x) {
    return PointLocator(mesh).locate(x);
}

std::optional<double> interpolate(const SimplexMesh& mesh, std::span<const double> nodal, const Vec3& x) {
    return PointLocator(mesh).interpolate(nodal, x);
}

} // namespace rsb
