#include "rsb/particles.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

#include "rsb/errors.hpp"

namespace rsb {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : state_(mix(seed ^ mix(stream + kGolden))) {}

std::uint64_t CounterRng::next_u64() {
    state_ += kGolden;
    return mix(state_);
}

double CounterRng::uniform() {
    // 53 random bits mapped to the open interval (0, 1).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double a = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

Vec3 CounterRng::normal3() {
    const double x = normal();
    const double y = normal();
    const double z = normal();
    return {x, y, z};
}

Vec3 sample_initial(const GaussianSpec& spec, const Sdf& sdf, CounterRng& rng, int max_rejections) {
    spec.validate();
    for (int attempt = 0; attempt <= max_rejections; ++attempt) {
        const Vec3 x = spec.center + spec.sigma * rng.normal3();
        if (sdf(x) < 0.0) {
            return x;
        }
    }
    throw ConfigError("initial particle sampling: no accepted draw inside the domain after " +
                      std::to_string(max_rejections) + " rejections");
}

StepResult step(const ParticleModel& model, const Vec3& x, double t, double dt, const Vec3& noise) {
    Vec3 velocity;
    if (model.locator != nullptr) {
        if (model.drift != nullptr) {
            if (const auto v = model.locator->interpolate(std::span<const Vec3>(*model.drift), x)) {
                velocity += *v;
            }
        }
        if (model.solution != nullptr) {
            if (const auto u = recover_control(*model.solution, *model.locator, x, t)) {
                velocity += *u;
            }
        }
    }

    StepResult out;
    Vec3 proposal = x + dt * velocity + std::sqrt(model.epsilon * dt) * noise;
    double d = (*model.sdf)(proposal);
    while (d > 0.0 && out.reflections < kMaxReflectionAttempts) {
        const SdfGradient g = sdf_gradient(*model.sdf, proposal);
        proposal -= (d + kReflectionMargin) * g.direction;
        d = (*model.sdf)(proposal);
        ++out.reflections;
    }
    if (d > 0.0) {
        out.rejected = true;
        out.position = x;
        return out;
    }
    out.position = proposal;
    return out;
}

EnsembleStats ensemble_stats(const std::vector<ParticlePath>& paths, double height_threshold) {
    EnsembleStats stats;
    stats.height_threshold = height_threshold;
    if (paths.empty()) {
        return stats;
    }
    const double n = static_cast<double>(paths.size());
    const std::size_t stored = paths.front().positions.size();
    stats.mean_height.assign(stored, 0.0);
    int above = 0;
    for (const auto& p : paths) {
        for (std::size_t s = 0; s < stored; ++s) {
            stats.mean_height[s] += p.positions[s].z / n;
        }
        const Vec3& end = p.positions.back();
        stats.terminal_mean += end / n;
        if (end.z > height_threshold) {
            ++above;
        }
    }
    for (const auto& p : paths) {
        const Vec3 d = p.positions.back() - stats.terminal_mean;
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                stats.terminal_covariance[a][b] += d[a] * d[b] / n;
            }
        }
    }
    stats.fraction_above = above / n;
    return stats;
}

Ensemble simulate_ensemble(const ParticleModel& model, const GaussianSpec& initial, const EnsembleSettings& settings) {
    if (settings.particles < 1 || settings.steps < 1) {
        throw ConfigError("particle ensemble needs at least one particle and one step");
    }
    if (model.sdf == nullptr) {
        throw std::invalid_argument("simulate_ensemble: model has no domain");
    }
    Ensemble ens;
    ens.dt = 1.0 / settings.steps;
    ens.paths.resize(settings.particles);
    for (int p = 0; p < settings.particles; ++p) {
        CounterRng rng(settings.seed, static_cast<std::uint64_t>(p));
        ParticlePath& path = ens.paths[p];
        path.seed = settings.seed;
        path.positions.reserve(settings.steps + 1);
        path.reflections.reserve(settings.steps + 1);
        Vec3 x = sample_initial(initial, *model.sdf, rng);
        path.positions.push_back(x);
        path.reflections.push_back(0);
        for (int s = 0; s < settings.steps; ++s) {
            const StepResult r = step(model, x, s * ens.dt, ens.dt, rng.normal3());
            x = r.position;
            path.positions.push_back(x);
            path.reflections.push_back(r.reflections);
            path.reflection_count += r.reflections > 0 ? 1 : 0;
            path.rejected_moves += r.rejected ? 1 : 0;
        }
    }
    ens.stats = ensemble_stats(ens.paths, settings.height_threshold);
    return ens;
}

void write_trajectories_csv(const std::filesystem::path& path, const Ensemble& ensemble) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "particle,step,t,x,y,z,reflections\n" << std::setprecision(17);
    for (std::size_t p = 0; p < ensemble.paths.size(); ++p) {
        const auto& path_p = ensemble.paths[p];
        for (std::size_t s = 0; s < path_p.positions.size(); ++s) {
            const Vec3& x = path_p.positions[s];
            out << p << ',' << s << ',' << s * ensemble.dt << ',' << x.x << ',' << x.y << ',' << x.z << ','
                << path_p.reflections[s] << '\n';
        }
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

void write_ensemble_stats_csv(const std::filesystem::path& path, const Ensemble& ensemble) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    const EnsembleStats& s = ensemble.stats;
    int reflections = 0;
    int rejected = 0;
    for (const auto& p : ensemble.paths) {
        reflections += p.reflection_count;
        rejected += p.rejected_moves;
    }
    out << "quantity,value\n" << std::setprecision(17);
    out << "particles," << ensemble.paths.size() << '\n';
    out << "steps," << (ensemble.paths.empty() ? 0 : ensemble.paths.front().positions.size() - 1) << '\n';
    out << "terminal_mean_x," << s.terminal_mean.x << '\n';
    out << "terminal_mean_y," << s.terminal_mean.y << '\n';
    out << "terminal_mean_z," << s.terminal_mean.z << '\n';
    const char* axes = "xyz";
    for (int a = 0; a < 3; ++a) {
        for (int b = a; b < 3; ++b) {
            out << "terminal_cov_" << axes[a] << axes[b] << ',' << s.terminal_covariance[a][b] << '\n';
        }
    }
    out << "height_threshold," << s.height_threshold << '\n';
    out << "fraction_above," << s.fraction_above << '\n';
    out << "reflected_steps," << reflections << '\n';
    out << "rejected_moves," << rejected << '\n';
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace rsb
