#include <doctest.h>

#include <algorithm>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "rsb/errors.hpp"
#include "rsb/geometry.hpp"
#include "rsb/mesh.hpp"
#include "support.hpp"

using namespace rsb;

namespace {

Sdf ball(const Vec3& c, double r) {
    return [c, r](const Vec3& x) { return norm(x - c) - r; };
}

// Independent count of Kuhn tets with centroid inside: walk every cell, every monotone
// lattice path from its lower to its upper corner.
std::size_t centroid_count_oracle(int n, const Sdf& sdf) {
    const double h = 1.0 / n;
    std::array<int, 3> perm{0, 1, 2};
    std::size_t count = 0;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                std::array<int, 3> p = perm;
                do {
                    Vec3 corner{i * h, j * h, k * h};
                    Vec3 sum = corner;
                    for (int s = 0; s < 3; ++s) {
                        corner[p[s]] += h;
                        sum += corner;
                    }
                    if (sdf(sum / 4.0) < 0.0) {
                        ++count;
                    }
                } while (std::next_permutation(p.begin(), p.end()));
            }
    return count;
}

std::map<std::array<int, 3>, int> face_incidence(const SimplexMesh& mesh) {
    std::map<std::array<int, 3>, int> faces;
    for (const Tet& t : mesh.tets) {
        for (int l = 0; l < 4; ++l) {
            std::array<int, 3> f{};
            int m = 0;
            for (int q = 0; q < 4; ++q) {
                if (q != l) {
                    f[m++] = t[q];
                }
            }
            std::sort(f.begin(), f.end());
            ++faces[f];
        }
    }
    return faces;
}

} // namespace

TEST_CASE("full cube at N = 2") {
    const SimplexMesh mesh = testing::cube_mesh(2);
    CHECK(mesh.element_count() == 48);
    CHECK(mesh.vertex_count() == 27);
    // 6 faces x 4 squares x 2 triangles
    CHECK(mesh.boundary_faces.size() == 48);
    double area = 0.0;
    for (const auto& f : mesh.boundary_faces) {
        area += f.area;
        int axis_hits = 0;
        for (int a = 0; a < 3; ++a) {
            if (std::abs(std::abs(f.normal[a]) - 1.0) < 1e-12) {
                ++axis_hits;
            }
        }
        CHECK(axis_hits == 1);
        const Vec3 centroid =
            (mesh.vertices[f.vertices[0]] + mesh.vertices[f.vertices[1]] + mesh.vertices[f.vertices[2]]) / 3.0;
        CHECK(dot(f.normal, centroid - Vec3{0.5, 0.5, 0.5}) > 0.0);
    }
    CHECK(area == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(mesh_volume(mesh) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("full cube volume and positive orientation at several resolutions") {
    for (int n : {1, 3, 5}) {
        const SimplexMesh mesh = testing::cube_mesh(n);
        CHECK(mesh.element_count() == static_cast<std::size_t>(6 * n * n * n));
        CHECK(std::abs(mesh_volume(mesh) - 1.0) <= 1e-12);
        for (const Tet& t : mesh.tets) {
            const auto& x = mesh.vertices;
            CHECK(dot(x[t[1]] - x[t[0]], cross(x[t[2]] - x[t[0]], x[t[3]] - x[t[0]])) > 0.0);
        }
    }
}

TEST_CASE("interior faces are shared by two tets and boundary faces by one") {
    const SimplexMesh mesh = testing::cube_mesh(4);
    const auto faces = face_incidence(mesh);
    std::size_t single = 0;
    for (const auto& [f, count] : faces) {
        REQUIRE(count <= 2);
        if (count == 1) {
            ++single;
            // A non-conforming cell interface would leave unmatched faces inside the cube.
            bool on_surface = false;
            for (int a = 0; a < 3; ++a) {
                const double c = mesh.vertices[f[0]][a];
                if ((c == 0.0 || c == 1.0) && mesh.vertices[f[1]][a] == c && mesh.vertices[f[2]][a] == c) {
                    on_surface = true;
                }
            }
            CHECK(on_surface);
        }
    }
    CHECK(single == mesh.boundary_faces.size());
    std::set<std::array<int, 3>> boundary;
    for (const auto& bf : mesh.boundary_faces) {
        auto v = bf.vertices;
        std::sort(v.begin(), v.end());
        CHECK(boundary.insert(v).second);
        CHECK(faces.at(v) == 1);
    }
}

TEST_CASE("everything outside is a configuration error") {
    const Sdf outside = [](const Vec3&) { return 1.0; };
    CHECK_THROWS_AS(generate_masked_mesh(8, outside), ConfigError);
}

TEST_CASE("masking keeps exactly the tets with centroid inside") {
    const Sdf sdf = ball({0.45, 0.5, 0.55}, 0.33);
    for (int n : {6, 11}) {
        const SimplexMesh mesh = generate_masked_mesh(n, sdf);
        CHECK(mesh.element_count() == centroid_count_oracle(n, sdf));
        for (std::size_t e = 0; e < mesh.element_count(); ++e) {
            const Tet& t = mesh.tets[e];
            const Vec3 c = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]] + mesh.vertices[t[3]]) / 4.0;
            CHECK(sdf(c) < 0.0);
        }
    }
}

TEST_CASE("only the largest component survives") {
    const Sdf big = ball({0.3, 0.3, 0.3}, 0.2);
    const Sdf small = ball({0.8, 0.8, 0.8}, 0.12);
    const Sdf both = [&](const Vec3& x) { return std::min(big(x), small(x)); };
    const SimplexMesh mesh = generate_masked_mesh(16, both);
    CHECK(mesh.element_count() == centroid_count_oracle(16, big));
    for (const Vec3& v : mesh.vertices) {
        CHECK(norm(v - Vec3{0.3, 0.3, 0.3}) < 0.2 + 0.12);
        CHECK(norm(v - Vec3{0.8, 0.8, 0.8}) > 0.12);
    }
}

TEST_CASE("spiral mesh at N = 40") {
    const HelixTube tube(HelixSpec{});
    const SimplexMesh mesh = generate_masked_mesh(40, clip_to_box(tube.as_sdf(), Box{}));
    CHECK(mesh.vertex_count() > 0);
    CHECK(mesh.vertex_count() < 41u * 41u * 41u);
    // Regression value of this build.
    CHECK(mesh.vertex_count() == 13208);
    CHECK(mesh.element_count() == 56502);
    // Volume of the staircase approximates the tube volume (length times disk area).
    const HelixSpec s;
    const double length = std::sqrt(1.0 + s.radius * s.radius * s.angular_rate * s.angular_rate);
    const double tube_volume = length * std::numbers::pi * s.tube_radius * s.tube_radius;
    CHECK(mesh_volume(mesh) == doctest::Approx(tube_volume).epsilon(0.05));
    // Every vertex carries its lattice coordinates.
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
        const auto& l = mesh.lattice[i];
        CHECK(norm(mesh.vertices[i] - Vec3{l[0] / 40.0, l[1] / 40.0, l[2] / 40.0}) < 1e-14);
    }
}

TEST_CASE("unit right tet geometry") {
    const ElementGeometry g = tet_geometry({Vec3{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    CHECK(g.volume == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(norm(g.gradients[0] - Vec3{-1, -1, -1}) < 1e-15);
    CHECK(norm(g.gradients[1] - Vec3{1, 0, 0}) < 1e-15);
    CHECK(norm(g.gradients[2] - Vec3{0, 1, 0}) < 1e-15);
    CHECK(norm(g.gradients[3] - Vec3{0, 0, 1}) < 1e-15);
}

TEST_CASE("basis gradients match finite differences of the barycentric map") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::array<Vec3, 4> c;
        for (auto& p : c) {
            p = testing::random_point(rng);
        }
        double det = dot(c[1] - c[0], cross(c[2] - c[0], c[3] - c[0]));
        if (std::abs(det) < 1e-2) {
            continue;
        }
        const ElementGeometry g = tet_geometry(c);
        CHECK(g.volume == doctest::Approx(std::abs(det) / 6.0).epsilon(1e-12));
        // Barycentric coordinates by solving the 4x4 affine system.
        Eigen::Matrix4d a;
        for (int q = 0; q < 4; ++q) {
            a.col(q) << c[q].x, c[q].y, c[q].z, 1.0;
        }
        const Eigen::Matrix4d inv = a.inverse();
        auto lambda = [&](const Vec3& x) -> Eigen::Vector4d { return inv * Eigen::Vector4d(x.x, x.y, x.z, 1.0); };
        const Vec3 x0 = (c[0] + c[1] + c[2] + c[3]) / 4.0;
        const double hstep = 1e-6;
        for (int q = 0; q < 4; ++q) {
            Vec3 fd;
            for (int axis = 0; axis < 3; ++axis) {
                Vec3 xp = x0, xm = x0;
                xp[axis] += hstep;
                xm[axis] -= hstep;
                fd[axis] = (lambda(xp)(q) - lambda(xm)(q)) / (2 * hstep);
            }
            CHECK(norm(fd - g.gradients[q]) <= 1e-6 * (1.0 + norm(fd)));
        }
        const Vec3 sum = g.gradients[0] + g.gradients[1] + g.gradients[2] + g.gradients[3];
        CHECK(norm(sum) <= 1e-12 * norm(g.gradients[0]));
    }
}

TEST_CASE("element geometry is translation invariant") {
    const std::array<Vec3, 4> c{Vec3{0.1, 0.2, 0.0}, {0.9, 0.1, 0.2}, {0.3, 0.8, 0.1}, {0.2, 0.3, 0.7}};
    std::array<Vec3, 4> shifted = c;
    for (auto& p : shifted) {
        p += Vec3{5, 5, 5};
    }
    const ElementGeometry a = tet_geometry(c);
    const ElementGeometry b = tet_geometry(shifted);
    CHECK(a.volume == doctest::Approx(b.volume).epsilon(1e-12));
    for (int q = 0; q < 4; ++q) {
        CHECK(norm(a.gradients[q] - b.gradients[q]) <= 1e-10);
    }
}

TEST_CASE("degenerate tet is a mesh error") {
    CHECK_THROWS_AS(tet_geometry({Vec3{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}), MeshError);
}

TEST_CASE("point location and interpolation") {
    const SimplexMesh mesh = testing::cube_mesh(5);
    const PointLocator locator(mesh);
    const Vec3 a{0.3, -1.2, 2.0};
    std::vector<double> linear(mesh.vertex_count());
    std::vector<double> constant(mesh.vertex_count(), 4.25);
    for (std::size_t i = 0; i < linear.size(); ++i) {
        linear[i] = dot(a, mesh.vertices[i]) + 0.7;
    }
    SUBCASE("vertices return the nodal value") {
        for (std::size_t i = 0; i < mesh.vertex_count(); i += 7) {
            const auto v = locator.interpolate(linear, mesh.vertices[i]);
            REQUIRE(v);
            CHECK(*v == doctest::Approx(linear[i]).epsilon(1e-12));
        }
    }
    SUBCASE("linear and constant fields are reproduced inside") {
        std::mt19937_64 rng(21);
        for (int i = 0; i < 500; ++i) {
            const Vec3 x = testing::random_point(rng);
            const auto v = locator.interpolate(linear, x);
            const auto c = locator.interpolate(constant, x);
            REQUIRE(v);
            REQUIRE(c);
            CHECK(std::abs(*v - (dot(a, x) + 0.7)) <= 1e-12);
            CHECK(std::abs(*c - 4.25) <= 1e-12);
            const auto loc = locator.locate(x);
            double s = 0.0;
            for (double l : loc->barycentric) {
                CHECK(l >= -1e-10);
                s += l;
            }
            CHECK(s == doctest::Approx(1.0));
        }
    }
    SUBCASE("outside returns nothing") {
        CHECK_FALSE(locator.locate({1.5, 0.5, 0.5}));
        CHECK_FALSE(locator.locate({0.5, -0.01, 0.5}));
    }
}

TEST_CASE("location inside a masked mesh agrees with the convenience wrappers") {
    const Sdf sdf = ball({0.5, 0.5, 0.5}, 0.4);
    const SimplexMesh mesh = generate_masked_mesh(10, sdf);
    const PointLocator locator(mesh);
    std::vector<double> f(mesh.vertex_count());
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = mesh.vertices[i].x - 2 * mesh.vertices[i].z;
    }
    std::mt19937_64 rng(23);
    int found = 0;
    for (int i = 0; i < 300; ++i) {
        const Vec3 x = testing::random_point(rng);
        const auto a = locator.interpolate(f, x);
        const auto b = interpolate(mesh, f, x);
        CHECK(a.has_value() == b.has_value());
        if (a) {
            ++found;
            CHECK(*a == doctest::Approx(x.x - 2 * x.z));
            CHECK(*b == doctest::Approx(*a));
        }
        if (norm(x - Vec3{0.5, 0.5, 0.5}) < 0.25) {
            CHECK(a.has_value());
        }
    }
    CHECK(found > 0);
}
