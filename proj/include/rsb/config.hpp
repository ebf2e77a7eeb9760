#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rsb/bridge.hpp"
#include "rsb/geometry.hpp"
#include "rsb/particles.hpp"

namespace rsb {

enum class DomainShape { helix, box };
enum class DriftMode { none, helical, file };

/// Everything a run needs. The text format is documented in docs/config_format.md.
struct RunConfig {
    DomainShape shape = DomainShape::helix;
    HelixSpec helix;
    int resolution = 70;

    SolverConfig solver;

    GaussianSpec initial{{0.72, 0.63, 0.05}, 0.05};
    GaussianSpec terminal{{0.76, 0.42, 0.95}, 0.05};

    DriftMode drift_mode = DriftMode::none;
    double drift_magnitude = 1.0;
    std::filesystem::path drift_file;
    bool drift_project = true;

    EnsembleSettings particles;
    bool particles_controlled = true;

    std::filesystem::path output_directory = "out";
    bool write_vtk = true;
    int vtk_stride = 1;
    bool write_matrices = false;

    void validate() const;
};

/// Parses the INI-style text. `overrides` are `section.key=value` strings applied on
/// top of the file before conversion. Unknown sections or keys are errors.
RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {},
                       const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Canonical text form; parse_config(dump_config(c)) reproduces c exactly.
std::string dump_config(const RunConfig& config);

std::string to_string(DomainShape shape);
std::string to_string(DriftMode mode);
std::string to_string(BackwardConvection mode);
std::string to_string(GaugeFix gauge);

} // namespace rsb
