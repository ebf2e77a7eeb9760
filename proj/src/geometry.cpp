#include "rsb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rsb/errors.hpp"

namespace rsb {

void HelixSpec::validate() const {
    if (!(tube_radius > 0.0)) {
        throw ConfigError("helix tube_radius must be positive");
    }
    if (!(radius >= 0.0)) {
        throw ConfigError("helix radius must be non-negative");
    }
    if (!(z_max > z_min)) {
        throw ConfigError("helix z range is empty");
    }
}

void GaussianSpec::validate() const {
    if (!(sigma > 0.0)) {
        throw ConfigError("gaussian sigma must be positive");
    }
}

Vec3 helix_point(double z, const HelixSpec& spec) {
    constexpr double slack = 1e-12;
    if (!(z >= spec.z_min - slack && z <= spec.z_max + slack)) {
        throw std::domain_error("helix parameter outside the z range");
    }
    const double a = spec.angular_rate * z;
    return {spec.center_x + spec.radius * std::cos(a), spec.center_y + spec.radius * std::sin(a), z};
}

Vec3 helix_derivative(double z, const HelixSpec& spec) {
    const double a = spec.angular_rate * z;
    const double rw = spec.radius * spec.angular_rate;
    return {-rw * std::sin(a), rw * std::cos(a), 1.0};
}

HelixTube::HelixTube(HelixSpec spec, int samples) : spec_(spec) {
    spec_.validate();
    samples = std::max(samples, kMinSamples);
    params_.resize(samples);
    points_.resize(samples);
    for (int i = 0; i < samples; ++i) {
        const double z = spec_.z_min + (spec_.z_max - spec_.z_min) * i / (samples - 1);
        params_[i] = z;
        points_[i] = helix_point(z, spec_);
    }
}

ClosestPoint HelixTube::closest_point(const Vec3& x) const {
    const int n = static_cast<int>(points_.size());
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const Vec3 d = x - points_[i];
        const double d2 = dot(d, d);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }

    auto dist2 = [&](double z) {
        const Vec3 d = x - helix_point(z, spec_);
        return dot(d, d);
    };

    double lo = params_[std::max(best - 1, 0)];
    double hi = params_[std::min(best + 1, n - 1)];
    constexpr double inv_phi = 0.6180339887498949;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = dist2(c);
    double fd = dist2(d);
    while (hi - lo > 1e-10) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = dist2(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = dist2(d);
        }
    }

    // The bracket endpoints are sample points; keep whichever candidate is best.
    ClosestPoint result;
    double z_star = 0.5 * (lo + hi);
    double f_star = dist2(z_star);
    if (best_d2 < f_star) {
        z_star = params_[best];
        f_star = best_d2;
    }
    result.parameter = z_star;
    result.distance = std::sqrt(f_star);
    result.point = helix_point(z_star, spec_);
    return result;
}

Vec3 HelixTube::tangent_field(const Vec3& x, double magnitude) const {
    const ClosestPoint cp = closest_point(x);
    const Vec3 t = helix_derivative(cp.parameter, spec_);
    return t * (magnitude / norm(t));
}

Sdf HelixTube::as_sdf() const {
    return [tube = *this](const Vec3& x) { return tube.sdf(x); };
}

double tube_sdf(const Vec3& x, const HelixSpec& spec) { return HelixTube(spec).sdf(x); }

Vec3 helical_tangent_field(const Vec3& x, const HelixSpec& spec, double magnitude) {
    return HelixTube(spec).tangent_field(x, magnitude);
}

SdfGradient sdf_gradient(const Sdf& sdf, const Vec3& x, double step) {
    Vec3 g;
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 plus = x;
        Vec3 minus = x;
        plus[axis] += step;
        minus[axis] -= step;
        g[axis] = (sdf(plus) - sdf(minus)) / (2.0 * step);
    }
    const double n = norm(g);
    SdfGradient out;
    if (n < 1e-12) {
        out.degenerate = true;
        return out;
    }
    out.direction = g / n;
    return out;
}

double box_sdf(const Vec3& x, const Box& box) {
    double d = -std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 3; ++axis) {
        d = std::max(d, box.lower[axis] - x[axis]);
        d = std::max(d, x[axis] - box.upper[axis]);
    }
    return d;
}

Sdf clip_to_box(Sdf sdf, const Box& box) {
    return [inner = std::move(sdf), box](const Vec3& x) { return std::max(inner(x), box_sdf(x, box)); };
}

std::string check_gaussian_inside(const GaussianSpec& g, const Sdf& sdf) {
    const double d = sdf(g.center);
    if (d < 0.0) {
        return {};
    }
    std::ostringstream os;
    os << "gaussian centre (" << g.center.x << ", " << g.center.y << ", " << g.center.z
       << ") lies outside the domain (sdf = " << d << ")";
    return os.str();
}

} // namespace rsb
