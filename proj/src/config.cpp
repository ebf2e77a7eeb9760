#include "rsb/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "rsb/errors.hpp"

namespace rsb {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"geometry", {"shape", "center_x", "center_y", "radius", "angular_rate", "tube_radius", "z_min", "z_max"}},
        {"mesh", {"resolution"}},
        {"solver",
         {"epsilon", "time_steps", "tolerance", "max_iterations", "positivity_floor", "initial_terminal_scale",
          "backward_convection", "gauge", "gmres_tolerance", "gmres_restart", "gmres_max_iterations"}},
        {"densities", {"initial_center", "initial_sigma", "terminal_center", "terminal_sigma"}},
        {"drift", {"mode", "magnitude", "file", "project"}},
        {"particles", {"count", "steps", "seed", "threshold", "controlled"}},
        {"output", {"directory", "write_vtk", "vtk_stride", "write_matrices"}},
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> raw(const std::string& key) const {
        if (auto v = tree_.get_optional<std::string>(key)) {
            return trim(*v);
        }
        return std::nullopt;
    }

    void real(const std::string& key, double& out) const {
        if (auto v = raw(key)) {
            out = parse_real(key, *v);
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out) const {
        if (auto v = raw(key)) {
            Int parsed{};
            const auto* end = v->data() + v->size();
            const auto res = std::from_chars(v->data(), end, parsed);
            if (res.ec != std::errc{} || res.ptr != end) {
                throw ConfigError(key + ": expected an integer, got '" + *v + "'");
            }
            out = parsed;
        }
    }

    void boolean(const std::string& key, bool& out) const {
        if (auto v = raw(key)) {
            if (*v == "true" || *v == "on" || *v == "yes" || *v == "1") {
                out = true;
            } else if (*v == "false" || *v == "off" || *v == "no" || *v == "0") {
                out = false;
            } else {
                throw ConfigError(key + ": expected true or false, got '" + *v + "'");
            }
        }
    }

    void point(const std::string& key, Vec3& out) const {
        if (auto v = raw(key)) {
            std::vector<double> parts;
            std::stringstream ss(*v);
            std::string item;
            while (std::getline(ss, item, ',')) {
                parts.push_back(parse_real(key, trim(item)));
            }
            if (parts.size() != 3) {
                throw ConfigError(key + ": expected three comma-separated numbers");
            }
            out = {parts[0], parts[1], parts[2]};
        }
    }

    void text(const std::string& key, std::string& out) const {
        if (auto v = raw(key)) {
            out = *v;
        }
    }

private:
    static double parse_real(const std::string& key, const std::string& v) {
        double parsed = 0.0;
        const auto* end = v.data() + v.size();
        const auto res = std::from_chars(v.data(), end, parsed);
        if (res.ec != std::errc{} || res.ptr != end) {
            throw ConfigError(key + ": expected a number, got '" + v + "'");
        }
        return parsed;
    }

    const pt::ptree& tree_;
};

void check_known(const pt::ptree& tree, const std::string& source) {
    const auto& keys = known_keys();
    for (const auto& [section, body] : tree) {
        const auto it = keys.find(section);
        if (it == keys.end()) {
            throw ConfigError(source + ": unknown section [" + section + "]");
        }
        if (!body.data().empty() && body.empty()) {
            throw ConfigError(source + ": key '" + section + "' outside of any section");
        }
        for (const auto& [key, value] : body) {
            if (!it->second.contains(key)) {
                throw ConfigError(source + ": unknown key '" + key + "' in [" + section + "]");
            }
        }
    }
}

RunConfig from_tree(const pt::ptree& tree) {
    RunConfig c;
    Reader r(tree);

    std::string shape = to_string(c.shape);
    r.text("geometry.shape", shape);
    if (shape == "helix") {
        c.shape = DomainShape::helix;
    } else if (shape == "box") {
        c.shape = DomainShape::box;
    } else {
        throw ConfigError("geometry.shape: expected helix or box, got '" + shape + "'");
    }
    r.real("geometry.center_x", c.helix.center_x);
    r.real("geometry.center_y", c.helix.center_y);
    r.real("geometry.radius", c.helix.radius);
    r.real("geometry.angular_rate", c.helix.angular_rate);
    r.real("geometry.tube_radius", c.helix.tube_radius);
    r.real("geometry.z_min", c.helix.z_min);
    r.real("geometry.z_max", c.helix.z_max);

    r.integer("mesh.resolution", c.resolution);

    r.real("solver.epsilon", c.solver.epsilon);
    r.integer("solver.time_steps", c.solver.time_steps);
    r.real("solver.tolerance", c.solver.fixed_point_tol);
    r.integer("solver.max_iterations", c.solver.max_fixed_point_iters);
    r.real("solver.positivity_floor", c.solver.positivity_floor);
    r.real("solver.initial_terminal_scale", c.solver.initial_terminal_scale);
    std::string backward = to_string(c.solver.backward_convection);
    r.text("solver.backward_convection", backward);
    if (backward == "adjoint") {
        c.solver.backward_convection = BackwardConvection::adjoint;
    } else if (backward == "shared") {
        c.solver.backward_convection = BackwardConvection::shared;
    } else {
        throw ConfigError("solver.backward_convection: expected adjoint or shared, got '" + backward + "'");
    }
    std::string gauge = to_string(c.solver.gauge);
    r.text("solver.gauge", gauge);
    if (gauge == "norm") {
        c.solver.gauge = GaugeFix::norm;
    } else if (gauge == "none") {
        c.solver.gauge = GaugeFix::none;
    } else {
        throw ConfigError("solver.gauge: expected norm or none, got '" + gauge + "'");
    }
    r.real("solver.gmres_tolerance", c.solver.gmres.rel_tol);
    r.integer("solver.gmres_restart", c.solver.gmres.restart);
    r.integer("solver.gmres_max_iterations", c.solver.gmres.max_iters);

    r.point("densities.initial_center", c.initial.center);
    r.real("densities.initial_sigma", c.initial.sigma);
    r.point("densities.terminal_center", c.terminal.center);
    r.real("densities.terminal_sigma", c.terminal.sigma);

    std::string mode = to_string(c.drift_mode);
    r.text("drift.mode", mode);
    if (mode == "none") {
        c.drift_mode = DriftMode::none;
    } else if (mode == "helical") {
        c.drift_mode = DriftMode::helical;
    } else if (mode == "file") {
        c.drift_mode = DriftMode::file;
    } else {
        throw ConfigError("drift.mode: expected none, helical or file, got '" + mode + "'");
    }
    r.real("drift.magnitude", c.drift_magnitude);
    std::string drift_file;
    r.text("drift.file", drift_file);
    c.drift_file = drift_file;
    r.boolean("drift.project", c.drift_project);

    r.integer("particles.count", c.particles.particles);
    r.integer("particles.steps", c.particles.steps);
    r.integer("particles.seed", c.particles.seed);
    r.real("particles.threshold", c.particles.height_threshold);
    r.boolean("particles.controlled", c.particles_controlled);

    std::string dir = c.output_directory.string();
    r.text("output.directory", dir);
    c.output_directory = dir;
    r.boolean("output.write_vtk", c.write_vtk);
    r.integer("output.vtk_stride", c.vtk_stride);
    r.boolean("output.write_matrices", c.write_matrices);

    c.validate();
    return c;
}

} // namespace

void RunConfig::validate() const {
    if (shape == DomainShape::helix) {
        helix.validate();
    }
    if (resolution < 4) {
        throw ConfigError("mesh.resolution must be at least 4");
    }
    solver.validate();
    initial.validate();
    terminal.validate();
    if (drift_mode == DriftMode::file && drift_file.empty()) {
        throw ConfigError("drift.mode = file needs drift.file");
    }
    if (particles.particles < 1 || particles.steps < 1) {
        throw ConfigError("particles.count and particles.steps must be at least 1");
    }
    if (vtk_stride < 1) {
        throw ConfigError("output.vtk_stride must be at least 1");
    }
    if (output_directory.empty()) {
        throw ConfigError("output.directory must not be empty");
    }
}

RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides, const std::string& source) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        const auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            throw ConfigError("override '" + o + "' is not of the form section.key=value");
        }
        tree.put(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
    }
    check_known(tree, source);
    return from_tree(tree);
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    return parse_config(in, overrides, path.string());
}

std::string dump_config(const RunConfig& c) {
    std::ostringstream os;
    os << std::setprecision(17);
    auto point = [&](const Vec3& p) { os << p.x << ", " << p.y << ", " << p.z << '\n'; };
    auto flag = [](bool b) { return b ? "true" : "false"; };
    os << "[geometry]\n"
       << "shape = " << to_string(c.shape) << '\n'
       << "center_x = " << c.helix.center_x << '\n'
       << "center_y = " << c.helix.center_y << '\n'
       << "radius = " << c.helix.radius << '\n'
       << "angular_rate = " << c.helix.angular_rate << '\n'
       << "tube_radius = " << c.helix.tube_radius << '\n'
       << "z_min = " << c.helix.z_min << '\n'
       << "z_max = " << c.helix.z_max << "\n\n";
    os << "[mesh]\nresolution = " << c.resolution << "\n\n";
    os << "[solver]\n"
       << "epsilon = " << c.solver.epsilon << '\n'
       << "time_steps = " << c.solver.time_steps << '\n'
       << "tolerance = " << c.solver.fixed_point_tol << '\n'
       << "max_iterations = " << c.solver.max_fixed_point_iters << '\n'
       << "positivity_floor = " << c.solver.positivity_floor << '\n'
       << "initial_terminal_scale = " << c.solver.initial_terminal_scale << '\n'
       << "backward_convection = " << to_string(c.solver.backward_convection) << '\n'
       << "gauge = " << to_string(c.solver.gauge) << '\n'
       << "gmres_tolerance = " << c.solver.gmres.rel_tol << '\n'
       << "gmres_restart = " << c.solver.gmres.restart << '\n'
       << "gmres_max_iterations = " << c.solver.gmres.max_iters << "\n\n";
    os << "[densities]\ninitial_center = ";
    point(c.initial.center);
    os << "initial_sigma = " << c.initial.sigma << "\nterminal_center = ";
    point(c.terminal.center);
    os << "terminal_sigma = " << c.terminal.sigma << "\n\n";
    os << "[drift]\n"
       << "mode = " << to_string(c.drift_mode) << '\n'
       << "magnitude = " << c.drift_magnitude << '\n';
    if (!c.drift_file.empty()) {
        os << "file = " << c.drift_file.string() << '\n';
    }
    os << "project = " << flag(c.drift_project) << "\n\n";
    os << "[particles]\n"
       << "count = " << c.particles.particles << '\n'
       << "steps = " << c.particles.steps << '\n'
       << "seed = " << c.particles.seed << '\n'
       << "threshold = " << c.particles.height_threshold << '\n'
       << "controlled = " << flag(c.particles_controlled) << "\n\n";
    os << "[output]\n"
       << "directory = " << c.output_directory.string() << '\n'
       << "write_vtk = " << flag(c.write_vtk) << '\n'
       << "vtk_stride = " << c.vtk_stride << '\n'
       << "write_matrices = " << flag(c.write_matrices) << '\n';
    return os.str();
}

std::string to_string(DomainShape shape) { return shape == DomainShape::helix ? "helix" : "box"; }

std::string to_string(DriftMode mode) {
    switch (mode) {
    case DriftMode::none:
        return "none";
    case DriftMode::helical:
        return "helical";
    case DriftMode::file:
        return "file";
    }
    return "none";
}

std::string to_string(GaugeFix gauge) { return gauge == GaugeFix::norm ? "norm" : "none"; }

std::string to_string(BackwardConvection mode) { return mode == BackwardConvection::adjoint ? "adjoint" : "shared"; }

} // namespace rsb
