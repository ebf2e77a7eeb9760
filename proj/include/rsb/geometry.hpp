#pragma once

#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rsb/vec3.hpp"

namespace rsb {

/// Signed distance convention: negative inside, zero on the wall, positive outside.
using Sdf = std::function<double(const Vec3&)>;

/// Helical centre curve c(z) = (cx + r cos(wz), cy + r sin(wz), z) swept by a disk of
/// radius tube_radius. Defaults give three turns over the unit height.
struct HelixSpec {
    double center_x = 0.5;
    double center_y = 0.5;
    double radius = 0.25;
    double angular_rate = 6.0 * std::numbers::pi;
    double tube_radius = 0.1;
    double z_min = 0.0;
    double z_max = 1.0;

    void validate() const;
};

struct GaussianSpec {
    Vec3 center;
    double sigma = 0.05;

    void validate() const;
};

struct Box {
    Vec3 lower{0.0, 0.0, 0.0};
    Vec3 upper{1.0, 1.0, 1.0};
};

Vec3 helix_point(double z, const HelixSpec& spec);
Vec3 helix_derivative(double z, const HelixSpec& spec);

struct ClosestPoint {
    double parameter = 0.0; // z* on the centre curve
    double distance = 0.0;  // |x - c(z*)|
    Vec3 point;
};

/// Precomputed distance queries against one helix. Immutable after construction, so a
/// single instance can be shared across threads.
class HelixTube {
public:
    static constexpr int kMinSamples = 600;

    explicit HelixTube(HelixSpec spec, int samples = 1024);

    const HelixSpec& spec() const noexcept { return spec_; }

    /// Coarse scan over the sampled curve, then golden-section refinement on the
    /// bracket around the best sample. The distance in z has one local minimum per
    /// nearby turn, which is why a purely local search is not used.
    ClosestPoint closest_point(const Vec3& x) const;

    double sdf(const Vec3& x) const { return closest_point(x).distance - spec_.tube_radius; }

    /// magnitude * unit tangent of the centre curve at the closest point.
    Vec3 tangent_field(const Vec3& x, double magnitude) const;

    Sdf as_sdf() const;

private:
    HelixSpec spec_;
    std::vector<double> params_;
    std::vector<Vec3> points_;
};

double tube_sdf(const Vec3& x, const HelixSpec& spec);
Vec3 helical_tangent_field(const Vec3& x, const HelixSpec& spec, double magnitude);

struct SdfGradient {
    Vec3 direction{0.0, 0.0, 1.0};
    bool degenerate = false;
};

/// Normalised central-difference gradient. Where the raw gradient vanishes (medial axis)
/// a fixed +z vector is returned with the degenerate flag set.
SdfGradient sdf_gradient(const Sdf& sdf, const Vec3& x, double step = 1e-5);

double box_sdf(const Vec3& x, const Box& box);

/// Intersection of an SDF region with an axis-aligned box.
Sdf clip_to_box(Sdf sdf, const Box& box);

/// Empty string when the Gaussian centre lies inside, otherwise a human-readable warning.
std::string check_gaussian_inside(const GaussianSpec& g, const Sdf& sdf);

} // namespace rsb
