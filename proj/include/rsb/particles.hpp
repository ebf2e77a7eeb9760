#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "rsb/bridge.hpp"
#include "rsb/geometry.hpp"
#include "rsb/mesh.hpp"

namespace rsb {

/// SplitMix64 stream keyed by (seed, stream id). Every draw is a pure function of the key
/// and a counter, so ensembles are reproducible under any scheduling of particles.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    double uniform();     // (0, 1)
    double normal();      // standard normal, Box-Muller
    Vec3 normal3();

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Everything one Euler-Maruyama step reads. Pointers are non-owning; a null solution
/// means no control, a null drift means no prior drift.
struct ParticleModel {
    const Sdf* sdf = nullptr;
    const PointLocator* locator = nullptr;
    const BridgeSolution* solution = nullptr;
    const NodalVectorField* drift = nullptr;
    double epsilon = 0.5;
};

inline constexpr double kReflectionMargin = 1e-6;
inline constexpr int kMaxReflectionAttempts = 20;

/// Rejection sampling of the Gaussian restricted to sdf < 0.
Vec3 sample_initial(const GaussianSpec& spec, const Sdf& sdf, CounterRng& rng, int max_rejections = 100000);

struct StepResult {
    Vec3 position;
    int reflections = 0; // projection moves applied
    bool rejected = false;
};

/// x' = x + (v + u*) dt + sqrt(eps dt) noise, pushed back along the SDF gradient when it
/// leaves the domain; after kMaxReflectionAttempts the move is rejected (x' = x).
StepResult step(const ParticleModel& model, const Vec3& x, double t, double dt, const Vec3& noise);

struct ParticlePath {
    std::vector<Vec3> positions;
    std::vector<int> reflections; // per stored position (0 for the start)
    int reflection_count = 0;
    int rejected_moves = 0;
    std::uint64_t seed = 0;
};

struct EnsembleStats {
    Vec3 terminal_mean;
    std::array<std::array<double, 3>, 3> terminal_covariance{};
    double height_threshold = 0.8;
    double fraction_above = 0.0;
    std::vector<double> mean_height; // per stored step
};

struct EnsembleSettings {
    int particles = 200;
    int steps = 400;
    std::uint64_t seed = 12345;
    double height_threshold = 0.8;
};

struct Ensemble {
    std::vector<ParticlePath> paths;
    EnsembleStats stats;
    double dt = 0.0;
};

Ensemble simulate_ensemble(const ParticleModel& model, const GaussianSpec& initial, const EnsembleSettings& settings);

EnsembleStats ensemble_stats(const std::vector<ParticlePath>& paths, double height_threshold);

/// Header `particle,step,t,x,y,z,reflections`.
void write_trajectories_csv(const std::filesystem::path& path, const Ensemble& ensemble);
/// Key/value summary `quantity,value`.
void write_ensemble_stats_csv(const std::filesystem::path& path, const Ensemble& ensemble);

} // namespace rsb
