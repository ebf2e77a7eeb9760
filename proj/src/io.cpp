#include "rsb/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rsb/errors.hpp"

namespace rsb {

namespace {

constexpr char kSolutionMagic[8] = {'R', 'S', 'B', 'F', '0', '0', '0', '1'};

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

template <class T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) {
        throw IoError("truncated solution file " + path.string());
    }
    return v;
}

} // namespace

void write_vtk(const std::filesystem::path& path, const SimplexMesh& mesh, const std::vector<PointScalars>& scalars,
               const std::vector<PointVectors>& vectors, const std::string& title) {
    auto out = open_out(path);
    const std::size_t nv = mesh.vertex_count();
    const std::size_t nc = mesh.element_count();
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << nv << " double\n" << std::setprecision(10);
    for (const Vec3& p : mesh.vertices) {
        out << p.x << ' ' << p.y << ' ' << p.z << '\n';
    }
    out << "CELLS " << nc << ' ' << nc * 5 << '\n';
    for (const Tet& t : mesh.tets) {
        out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
    }
    out << "CELL_TYPES " << nc << '\n';
    for (std::size_t e = 0; e < nc; ++e) {
        out << "10\n";
    }
    if (!scalars.empty() || !vectors.empty()) {
        out << "POINT_DATA " << nv << '\n' << std::setprecision(12);
        for (const auto& s : scalars) {
            if (s.values.size() != nv) {
                throw std::invalid_argument("VTK scalar field '" + s.name + "' has the wrong length");
            }
            out << "SCALARS " << s.name << " double 1\nLOOKUP_TABLE default\n";
            for (double v : s.values) {
                out << v << '\n';
            }
        }
        for (const auto& v : vectors) {
            if (v.values.size() != nv) {
                throw std::invalid_argument("VTK vector field '" + v.name + "' has the wrong length");
            }
            out << "VECTORS " << v.name << " double\n";
            for (const Vec3& x : v.values) {
                out << x.x << ' ' << x.y << ' ' << x.z << '\n';
            }
        }
    }
    finish(out, path);
}

void write_fixed_point_csv(const std::filesystem::path& path, const BridgeSolution& solution) {
    auto out = open_out(path);
    out << "iter,error\n" << std::setprecision(17);
    for (std::size_t m = 0; m < solution.errors.size(); ++m) {
        out << m + 1 << ',' << solution.errors[m] << '\n';
    }
    finish(out, path);
}

void write_mass_csv(const std::filesystem::path& path, std::span<const double> masses) {
    auto out = open_out(path);
    const int k_steps = static_cast<int>(masses.size()) - 1;
    out << "k,t,mass\n" << std::setprecision(17);
    for (int k = 0; k <= k_steps; ++k) {
        out << k << ',' << static_cast<double>(k) / k_steps << ',' << masses[k] << '\n';
    }
    finish(out, path);
}

void write_gmres_csv(const std::filesystem::path& path, const BridgeSolution& solution) {
    auto out = open_out(path);
    out << "k,direction,gmres_iters\n";
    const int last = solution.iterations_used - 1;
    for (const auto& r : solution.gmres) {
        if (r.iteration == last) {
            out << r.level << ',' << r.direction << ',' << r.gmres_iterations << '\n';
        }
    }
    finish(out, path);
}

void save_solution(const std::filesystem::path& path, const BridgeSolution& solution) {
    auto out = open_out(path, std::ios::binary);
    out.write(kSolutionMagic, sizeof(kSolutionMagic));
    write_pod<std::uint64_t>(out, solution.phi.nodes());
    write_pod<std::int32_t>(out, solution.phi.time_steps());
    write_pod<double>(out, solution.epsilon);
    write_pod<double>(out, solution.positivity_floor);
    write_pod<std::int32_t>(out, solution.iterations_used);
    write_pod<std::uint8_t>(out, solution.converged ? 1 : 0);
    for (const SpaceTimeField* f : {&solution.phi, &solution.phi_hat}) {
        out.write(reinterpret_cast<const char*>(f->data().data()),
                  static_cast<std::streamsize>(f->data().size() * sizeof(double)));
    }
    finish(out, path);
}

BridgeSolution load_solution(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open solution file " + path.string());
    }
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kSolutionMagic, sizeof(magic)) != 0) {
        throw IoError(path.string() + " is not a solution file");
    }
    const auto nodes = read_pod<std::uint64_t>(in, path);
    const auto k_steps = read_pod<std::int32_t>(in, path);
    if (k_steps < 1 || nodes == 0) {
        throw IoError("corrupt solution header in " + path.string());
    }
    BridgeSolution sol;
    sol.epsilon = read_pod<double>(in, path);
    sol.positivity_floor = read_pod<double>(in, path);
    sol.iterations_used = read_pod<std::int32_t>(in, path);
    sol.converged = read_pod<std::uint8_t>(in, path) != 0;
    sol.phi = SpaceTimeField(k_steps, nodes);
    sol.phi_hat = SpaceTimeField(k_steps, nodes);
    for (SpaceTimeField* f : {&sol.phi, &sol.phi_hat}) {
        in.read(reinterpret_cast<char*>(f->data().data()), static_cast<std::streamsize>(f->data().size() * sizeof(double)));
        if (!in) {
            throw IoError("truncated solution file " + path.string());
        }
    }
    sol.rho = SpaceTimeField(k_steps, nodes);
    for (std::size_t i = 0; i < sol.rho.data().size(); ++i) {
        sol.rho.data()[i] = sol.phi.data()[i] * sol.phi_hat.data()[i];
    }
    return sol;
}

void save_nodal_vectors(const std::filesystem::path& path, std::span<const Vec3> values) {
    auto out = open_out(path);
    out << std::setprecision(17);
    for (const Vec3& v : values) {
        out << v.x << ' ' << v.y << ' ' << v.z << '\n';
    }
    finish(out, path);
}

NodalVectorField load_nodal_vectors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open vector field file " + path.string());
    }
    NodalVectorField out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') {
            continue;
        }
        std::istringstream ls(line);
        Vec3 v;
        if (!(ls >> v.x >> v.y >> v.z)) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected three numbers");
        }
        out.push_back(v);
    }
    return out;
}

} // namespace rsb
