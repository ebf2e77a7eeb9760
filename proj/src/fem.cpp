#include "rsb/fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rsb/errors.hpp"

namespace rsb {

namespace {

template <class Kernel>
CsrMatrix assemble(const SimplexMesh& mesh, Kernel&& kernel) {
    CsrMatrix a = mesh_pattern(mesh);
    auto vals = a.values();
    std::array<std::array<double, 4>, 4> local{};
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const Tet& t = mesh.tets[e];
        const ElementGeometry g = element_geometry(mesh, e);
        kernel(e, g, local);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                vals[a.find(t[i], t[j])] += local[i][j];
            }
        }
    }
    return a;
}

} // namespace

CsrMatrix mesh_pattern(const SimplexMesh& mesh) {
    std::vector<std::vector<int>> rows(mesh.vertex_count());
    for (const Tet& t : mesh.tets) {
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                rows[t[i]].push_back(t[j]);
            }
        }
    }
    for (auto& r : rows) {
        std::sort(r.begin(), r.end());
        r.erase(std::unique(r.begin(), r.end()), r.end());
    }
    return CsrMatrix::from_pattern(rows);
}

CsrMatrix assemble_mass(const SimplexMesh& mesh) {
    return assemble(mesh, [](std::size_t, const ElementGeometry& g, auto& local) {
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                local[i][j] = g.volume * (i == j ? 0.1 : 0.05);
            }
        }
    });
}

CsrMatrix assemble_stiffness(const SimplexMesh& mesh) {
    return assemble(mesh, [](std::size_t, const ElementGeometry& g, auto& local) {
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                local[i][j] = g.volume * dot(g.gradients[i], g.gradients[j]);
            }
        }
    });
}

CsrMatrix assemble_convection_elementwise(const SimplexMesh& mesh, std::span<const Vec3> element_velocity) {
    if (element_velocity.size() != mesh.element_count()) {
        throw std::invalid_argument("convection: one velocity per element expected");
    }
    return assemble(mesh, [&](std::size_t e, const ElementGeometry& g, auto& local) {
        const Vec3& v = element_velocity[e];
        for (int j = 0; j < 4; ++j) {
            const double flux = dot(g.gradients[j], v) * g.volume * 0.25;
            for (int i = 0; i < 4; ++i) {
                local[i][j] = flux;
            }
        }
    });
}

CsrMatrix assemble_convection(const SimplexMesh& mesh, std::span<const Vec3> nodal_velocity) {
    if (nodal_velocity.size() != mesh.vertex_count()) {
        throw std::invalid_argument("convection: one velocity per vertex expected");
    }
    std::vector<Vec3> centroid(mesh.element_count());
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const Tet& t = mesh.tets[e];
        centroid[e] = (nodal_velocity[t[0]] + nodal_velocity[t[1]] + nodal_velocity[t[2]] + nodal_velocity[t[3]]) * 0.25;
    }
    return assemble_convection_elementwise(mesh, centroid);
}

std::vector<double> lumped_mass(const SimplexMesh& mesh) {
    std::vector<double> w(mesh.vertex_count(), 0.0);
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const double quarter = 0.25 * element_geometry(mesh, e).volume;
        for (int v : mesh.tets[e]) {
            w[v] += quarter;
        }
    }
    return w;
}

AssembledOperators assemble_operators(const SimplexMesh& mesh) {
    return {assemble_mass(mesh), assemble_stiffness(mesh), std::nullopt, lumped_mass(mesh)};
}

NodalField project_density(const SimplexMesh& mesh, std::span<const double> weights, const GaussianSpec& spec) {
    spec.validate();
    NodalField rho(mesh.vertex_count());
    const double inv_two_var = 1.0 / (2.0 * spec.sigma * spec.sigma);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const Vec3 d = mesh.vertices[i] - spec.center;
        rho[i] = std::exp(-dot(d, d) * inv_two_var);
    }
    const double mass = lumped_integral(weights, rho);
    if (!(mass > 0.0) || !std::isfinite(mass)) {
        std::ostringstream os;
        os << "gaussian at (" << spec.center.x << ", " << spec.center.y << ", " << spec.center.z
           << ") with sigma " << spec.sigma << " vanishes on every mesh node";
        throw ConfigError(os.str());
    }
    for (double& r : rho) {
        r /= mass;
    }
    return rho;
}

double lumped_integral(std::span<const double> weights, std::span<const double> field) {
    if (weights.size() != field.size()) {
        throw std::invalid_argument("lumped_integral: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        s += weights[i] * field[i];
    }
    return s;
}

double lumped_l2_norm(std::span<const double> weights, std::span<const double> field) {
    if (weights.size() != field.size()) {
        throw std::invalid_argument("lumped_l2_norm: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        s += weights[i] * field[i] * field[i];
    }
    return std::sqrt(s);
}

double lumped_l2_distance(std::span<const double> weights, std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || weights.size() != a.size()) {
        throw std::invalid_argument("lumped_l2_distance: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += weights[i] * d * d;
    }
    return std::sqrt(s);
}

double skewness_defect(const CsrMatrix& c) {
    const double denom = c.frobenius_norm();
    if (denom == 0.0) {
        return 0.0;
    }
    return add_scaled(c, 1.0, c.transpose(), 1.0).frobenius_norm() / denom;
}

} // namespace rsb
