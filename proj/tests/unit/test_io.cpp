#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rsb/errors.hpp"
#include "rsb/io.hpp"
#include "support.hpp"

using namespace rsb;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

BridgeSolution small_solution(std::size_t nodes, int k) {
    BridgeSolution s;
    s.phi = SpaceTimeField(k, nodes);
    s.phi_hat = SpaceTimeField(k, nodes);
    s.rho = SpaceTimeField(k, nodes);
    for (std::size_t i = 0; i < s.phi.data().size(); ++i) {
        s.phi.data()[i] = 1.0 + 0.1 * static_cast<double>(i) + 1e-17;
        s.phi_hat.data()[i] = 1.0 / (1.0 + static_cast<double>(i));
        s.rho.data()[i] = s.phi.data()[i] * s.phi_hat.data()[i];
    }
    s.epsilon = 0.37;
    s.positivity_floor = 1e-11;
    s.iterations_used = 3;
    s.errors = {1.0, 0.1, 0.001};
    s.gmres = {{2, 0, "backward", 7}, {2, 1, "forward", 8}, {1, 0, "backward", 9}};
    return s;
}

std::vector<std::string> lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) {
        out.push_back(l);
    }
    return out;
}

} // namespace

TEST_CASE("legacy VTK layout") {
    TempDir dir("rsb_io_vtk");
    const SimplexMesh mesh = testing::cube_mesh(1);
    std::vector<double> s(mesh.vertex_count(), 2.5);
    std::vector<Vec3> v(mesh.vertex_count(), Vec3{1, 2, 3});
    write_vtk(dir.path / "m.vtk", mesh, {{"rho", s}}, {{"control", v}}, "test");
    const auto l = lines(dir.path / "m.vtk");
    REQUIRE(l.size() > 10);
    CHECK(l[0] == "# vtk DataFile Version 3.0");
    CHECK(l[1] == "test");
    CHECK(l[2] == "ASCII");
    CHECK(l[3] == "DATASET UNSTRUCTURED_GRID");
    CHECK(l[4] == "POINTS 8 double");
    const std::string all = [&] {
        std::string a;
        for (const auto& x : l) {
            a += x + "\n";
        }
        return a;
    }();
    CHECK(all.find("CELLS 6 30") != std::string::npos);
    CHECK(all.find("CELL_TYPES 6") != std::string::npos);
    CHECK(all.find("POINT_DATA 8") != std::string::npos);
    CHECK(all.find("SCALARS rho double 1") != std::string::npos);
    CHECK(all.find("VECTORS control double") != std::string::npos);
    std::size_t tens = 0;
    for (const auto& x : l) {
        if (x == "10") {
            ++tens;
        }
    }
    CHECK(tens == 6);
    std::vector<double> short_field(3, 0.0);
    CHECK_THROWS_AS(write_vtk(dir.path / "bad.vtk", mesh, {{"rho", short_field}}), std::invalid_argument);
    CHECK_THROWS_AS(write_vtk("/nonexistent_dir/m.vtk", mesh), IoError);
}

TEST_CASE("diagnostic CSV files") {
    TempDir dir("rsb_io_csv");
    const BridgeSolution s = small_solution(4, 2);
    write_fixed_point_csv(dir.path / "fp.csv", s);
    write_mass_csv(dir.path / "mass.csv", std::vector<double>{1.0, 0.99, 1.01});
    write_gmres_csv(dir.path / "gmres.csv", s);
    const auto fp = lines(dir.path / "fp.csv");
    CHECK(fp.front() == "iter,error");
    CHECK(fp.size() == 4);
    const auto mass = lines(dir.path / "mass.csv");
    CHECK(mass.front() == "k,t,mass");
    CHECK(mass.size() == 4);
    CHECK(mass[3].rfind("2,1,", 0) == 0);
    const auto gm = lines(dir.path / "gmres.csv");
    CHECK(gm.front() == "k,direction,gmres_iters");
    // Only the last fixed-point iterate is written.
    CHECK(gm.size() == 3);
    CHECK(gm[1] == "0,backward,7");
}

TEST_CASE("solution files round trip bit for bit") {
    TempDir dir("rsb_io_solution");
    const BridgeSolution s = small_solution(9, 3);
    save_solution(dir.path / "s.bin", s);
    const BridgeSolution back = load_solution(dir.path / "s.bin");
    CHECK(back.phi.data() == s.phi.data());
    CHECK(back.phi_hat.data() == s.phi_hat.data());
    CHECK(back.rho.data() == s.rho.data());
    CHECK(back.time_steps() == 3);
    CHECK(back.phi.nodes() == 9);
    CHECK(back.epsilon == s.epsilon);
    CHECK(back.positivity_floor == s.positivity_floor);
}

TEST_CASE("damaged solution files are I/O errors") {
    TempDir dir("rsb_io_damaged");
    CHECK_THROWS_AS(load_solution(dir.path / "missing.bin"), IoError);
    {
        std::ofstream(dir.path / "junk.bin") << "this is not a solution";
    }
    CHECK_THROWS_AS(load_solution(dir.path / "junk.bin"), IoError);
    save_solution(dir.path / "s.bin", small_solution(9, 3));
    const auto size = std::filesystem::file_size(dir.path / "s.bin");
    std::filesystem::resize_file(dir.path / "s.bin", size - 17);
    CHECK_THROWS_AS(load_solution(dir.path / "s.bin"), IoError);
}

TEST_CASE("nodal vector files") {
    TempDir dir("rsb_io_vectors");
    const std::vector<Vec3> v{{1, 2, 3}, {-0.1, 1e-20, 0.3333333333333333}};
    save_nodal_vectors(dir.path / "v.txt", v);
    CHECK(load_nodal_vectors(dir.path / "v.txt") == v);
    {
        std::ofstream(dir.path / "bad.txt") << "1 2 3\n4 5\n";
    }
    CHECK_THROWS_AS(load_nodal_vectors(dir.path / "bad.txt"), IoError);
    CHECK_THROWS_AS(load_nodal_vectors(dir.path / "none.txt"), IoError);
}
