#pragma once

// Small helpers shared by the unit tests: reference meshes, dense oracles, generators.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "rsb/fem.hpp"
#include "rsb/mesh.hpp"
#include "rsb/sparse.hpp"

namespace rsb::testing {

inline double inside_everywhere(const Vec3&) { return -1.0; }

inline SimplexMesh cube_mesh(int n) { return generate_masked_mesh(n, inside_everywhere); }

/// One tetrahedron, no boundary bookkeeping.
inline SimplexMesh single_tet_mesh(const std::array<Vec3, 4>& corners) {
    SimplexMesh mesh;
    mesh.vertices.assign(corners.begin(), corners.end());
    mesh.tets.push_back({0, 1, 2, 3});
    mesh.lattice = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    mesh.resolution = 1;
    return mesh;
}

inline SimplexMesh unit_right_tet() { return single_tet_mesh({Vec3{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}); }

inline Eigen::MatrixXd to_dense(const CsrMatrix& a) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows(), a.rows());
    const auto off = a.row_offsets();
    const auto col = a.column_indices();
    const auto val = a.values();
    for (int i = 0; i < a.rows(); ++i) {
        for (int p = off[i]; p < off[i + 1]; ++p) {
            d(i, col[p]) += val[p];
        }
    }
    return d;
}

inline CsrMatrix from_dense(const Eigen::MatrixXd& d) {
    std::vector<CsrMatrix::Triplet> t;
    for (int i = 0; i < d.rows(); ++i) {
        for (int j = 0; j < d.cols(); ++j) {
            if (d(i, j) != 0.0) {
                t.push_back({i, j, d(i, j)});
            }
        }
    }
    return CsrMatrix::from_triplets(static_cast<int>(d.rows()), std::move(t));
}

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = u(rng);
    }
    return v;
}

inline Vec3 random_point(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    const double x = u(rng);
    const double y = u(rng);
    const double z = u(rng);
    return {x, y, z};
}

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

/// Divergence-free field on the unit cube, tangent to every face: curl of (0, 0, chi) with
/// chi = [x(1-x)y(1-y)]^2.
inline Vec3 cube_curl_field(const Vec3& p) {
    const double f = p.x * (1 - p.x);
    const double g = p.y * (1 - p.y);
    const double df = 1 - 2 * p.x;
    const double dg = 1 - 2 * p.y;
    // chi = f^2 g^2, curl (0,0,chi) = (d_y chi, -d_x chi, 0)
    return {2 * f * f * g * dg, -2 * f * df * g * g, 0.0};
}

} // namespace rsb::testing
