#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <scanvol/error.hpp>
#include <scanvol/io.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

using namespace scanvol;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("scanvol_io_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

OrientedPointCloud sample_cloud(bool colors) {
    OrientedPointCloud c;
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
        c.points.emplace_back(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        Vec3 n(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        c.normals.push_back(n.normalized());
        if (colors)
            c.colors.push_back({uint8_t(rng.next_below(256)), uint8_t(rng.next_below(256)),
                                uint8_t(rng.next_below(256))});
    }
    return c;
}

TriangleMesh sample_mesh() {
    TriangleMesh m;
    m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.25, 1.5, -0.75), Vec3(0.1, 0.2, 2.0)};
    m.faces = {{0, 1, 2}, {0, 2, 3}, {1, 3, 2}};
    return m;
}

}  // namespace

TEST_CASE("binary cloud PLY round trips bit exactly") {
    TempDir tmp;
    auto c = sample_cloud(true);
    write_cloud_ply(tmp.file("c.ply"), c, true);
    auto r = read_cloud_ply(tmp.file("c.ply"));
    REQUIRE(r.size() == c.size());
    REQUIRE(r.colors.size() == c.colors.size());
    for (size_t i = 0; i < c.size(); ++i) {
        CHECK(r.points[i] == c.points[i]);
        CHECK(r.normals[i] == c.normals[i]);
        CHECK(r.colors[i] == c.colors[i]);
    }
}

TEST_CASE("ascii cloud PLY round trips values exactly") {
    TempDir tmp;
    auto c = sample_cloud(false);
    write_cloud_ply(tmp.file("c.ply"), c, false);
    auto r = read_cloud_ply(tmp.file("c.ply"));
    REQUIRE(r.size() == c.size());
    CHECK_FALSE(r.has_colors());
    for (size_t i = 0; i < c.size(); ++i) {
        CHECK(r.points[i] == c.points[i]);  // %.17g preserves doubles
        CHECK(r.normals[i] == c.normals[i]);
    }
}

TEST_CASE("cloud PLY without normals is rejected") {
    TempDir tmp;
    std::ofstream out(tmp.file("bad.ply"));
    out << "ply\nformat ascii 1.0\nelement vertex 1\n"
           "property double x\nproperty double y\nproperty double z\n"
           "end_header\n0 0 0\n";
    out.close();
    CHECK_THROWS_AS(read_cloud_ply(tmp.file("bad.ply")), Error);
}

TEST_CASE("missing file raises an io error") {
    CHECK_THROWS_AS(read_cloud_ply("/nonexistent/nope.ply"), Error);
    try {
        read_cloud_ply("/nonexistent/nope.ply");
    } catch (const Error& e) {
        CHECK(e.code() == errc::io);
    }
}

TEST_CASE("mesh PLY round trips in both formats") {
    TempDir tmp;
    auto m = sample_mesh();
    for (bool binary : {true, false}) {
        write_mesh_ply(tmp.file("m.ply"), m, binary);
        auto r = read_mesh(tmp.file("m.ply"));
        REQUIRE(r.vertices.size() == m.vertices.size());
        REQUIRE(r.faces.size() == m.faces.size());
        for (size_t i = 0; i < m.vertices.size(); ++i) CHECK(r.vertices[i] == m.vertices[i]);
        for (size_t i = 0; i < m.faces.size(); ++i) CHECK(r.faces[i] == m.faces[i]);
    }
}

TEST_CASE("mesh PLY quads are fan triangulated") {
    TempDir tmp;
    std::ofstream out(tmp.file("quad.ply"));
    out << "ply\nformat ascii 1.0\nelement vertex 4\n"
           "property double x\nproperty double y\nproperty double z\n"
           "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
           "0 0 0\n1 0 0\n1 1 0\n0 1 0\n"
           "4 0 1 2 3\n";
    out.close();
    auto r = read_mesh_ply(tmp.file("quad.ply"));
    REQUIRE(r.faces.size() == 2);
    CHECK(r.faces[0] == std::array<int, 3>{0, 1, 2});
    CHECK(r.faces[1] == std::array<int, 3>{0, 2, 3});
}

TEST_CASE("mesh OBJ round trips and handles slash syntax") {
    TempDir tmp;
    auto m = sample_mesh();
    write_mesh_obj(tmp.file("m.obj"), m);
    auto r = read_mesh(tmp.file("m.obj"));
    REQUIRE(r.vertices.size() == m.vertices.size());
    for (size_t i = 0; i < m.vertices.size(); ++i) CHECK(r.vertices[i] == m.vertices[i]);
    for (size_t i = 0; i < m.faces.size(); ++i) CHECK(r.faces[i] == m.faces[i]);

    std::ofstream out(tmp.file("slash.obj"));
    out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2/2 3//3\nf -3 -2 -1\n";
    out.close();
    auto s = read_mesh_obj(tmp.file("slash.obj"));
    REQUIRE(s.faces.size() == 2);
    CHECK(s.faces[0] == std::array<int, 3>{0, 1, 2});
    CHECK(s.faces[1] == std::array<int, 3>{0, 1, 2});  // negative indices count from the end
}

TEST_CASE("mesh with out-of-range face index is rejected") {
    TempDir tmp;
    std::ofstream out(tmp.file("oob.obj"));
    out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n";
    out.close();
    CHECK_THROWS_AS(read_mesh_obj(tmp.file("oob.obj")), Error);
}

TEST_CASE("16-bit depth PNG quantizes to whole millimeters") {
    TempDir tmp;
    DepthImage d(7, 5, 0.0);
    d.at(0, 0) = 1.2344;  // 1234.4 mm -> 1234 mm
    d.at(1, 0) = 0.0004;  // valid but sub-millimeter: clamps to the 1 mm floor
    d.at(2, 0) = 3.0;
    d.at(3, 0) = 0.0;  // invalid stays invalid
    write_depth_png(tmp.file("d.png"), d);
    auto r = read_depth_image(tmp.file("d.png"));
    REQUIRE(r.width == d.width);
    REQUIRE(r.height == d.height);
    CHECK(r.at(0, 0) == doctest::Approx(1.234).epsilon(1e-12));
    CHECK(r.at(1, 0) == doctest::Approx(0.001).epsilon(1e-12));
    CHECK(r.at(2, 0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.at(3, 0) == 0.0);
    CHECK_FALSE(r.is_valid(3, 0));
}

TEST_CASE("PFM depth is lossless float interchange") {
    TempDir tmp;
    DepthImage d(6, 4, 0.0);
    Rng rng(4);
    for (int v = 0; v < 4; ++v)
        for (int u = 0; u < 6; ++u) d.at(u, v) = float(0.3 + rng.next_double() * 4.0);
    d.at(5, 3) = 0.0;
    write_depth_pfm(tmp.file("d.pfm"), d);
    auto r = read_depth_image(tmp.file("d.pfm"));
    REQUIRE(r.width == 6);
    REQUIRE(r.height == 4);
    for (int v = 0; v < 4; ++v)
        for (int u = 0; u < 6; ++u) CHECK(float(r.at(u, v)) == float(d.at(u, v)));
}

TEST_CASE("gray PNG round trips 8-bit content") {
    TempDir tmp;
    GrayImage g(9, 3);
    for (int v = 0; v < 3; ++v)
        for (int u = 0; u < 9; ++u) g.at(u, v) = float((v * 9 + u) * 10 % 256) / 255.0f;
    write_gray_png(tmp.file("g.png"), g);
    auto r = read_gray_png(tmp.file("g.png"));
    REQUIRE(r.width == 9);
    REQUIRE(r.height == 3);
    for (int v = 0; v < 3; ++v)
        for (int u = 0; u < 9; ++u)
            CHECK(std::lround(r.at(u, v) * 255.0f) == std::lround(g.at(u, v) * 255.0f));
}

TEST_CASE("pose files round trip bit exactly") {
    TempDir tmp;
    RigidMotion g = RigidMotion::from_axis_angle(Vec3(0.3, -1.0, 2.0), 1.23456789,
                                                 Vec3(0.1, 0.2, -0.3));
    write_pose(tmp.file("p.txt"), g);
    RigidMotion r = read_pose(tmp.file("p.txt"));
    CHECK(r.R == g.R);
    CHECK(r.t == g.t);
    CHECK(r.is_rigid());
}

TEST_CASE("plane files round trip and skip spurious renormalization") {
    TempDir tmp;
    Plane p;
    p.normal = Vec3(1, 2, 3).normalized();
    p.d = -0.125;
    write_plane(tmp.file("pl.txt"), p);
    Plane r = read_plane(tmp.file("pl.txt"));
    CHECK(r.normal == p.normal);
    CHECK(r.d == p.d);

    // clearly non-unit normals are normalized on read
    std::ofstream out(tmp.file("raw.txt"));
    out << "0 0 2 0.5\n";
    out.close();
    Plane s = read_plane(tmp.file("raw.txt"));
    CHECK((s.normal - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK(s.d == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("intrinsics files round trip") {
    TempDir tmp;
    CameraIntrinsics K;
    K.fu = 525.25;
    K.fv = 524.75;
    K.cu = 319.5;
    K.cv = 239.5;
    K.width = 640;
    K.height = 480;
    write_intrinsics(tmp.file("k.txt"), K);
    auto r = read_intrinsics(tmp.file("k.txt"));
    CHECK(r.fu == K.fu);
    CHECK(r.fv == K.fv);
    CHECK(r.cu == K.cu);
    CHECK(r.cv == K.cv);
    CHECK(r.width == K.width);
    CHECK(r.height == K.height);
}

TEST_CASE("correspondence CSV skips comments and headers") {
    TempDir tmp;
    std::ofstream out(tmp.file("c.csv"));
    out << "# injected matches\nu0,v0,u1,v1\n10.5,20,30,40.25\n1,2,3,4\n";
    out.close();
    auto rows = read_correspondence_csv(tmp.file("c.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::array<double, 4>{10.5, 20, 30, 40.25});
    CHECK(rows[1] == std::array<double, 4>{1, 2, 3, 4});
}

TEST_CASE("malformed correspondence rows are parse errors") {
    TempDir tmp;
    std::ofstream out(tmp.file("bad.csv"));
    out << "u0,v0,u1,v1\n1,2,3\n";
    out.close();
    CHECK_THROWS_AS(read_correspondence_csv(tmp.file("bad.csv")), Error);
    try {
        read_correspondence_csv(tmp.file("bad.csv"));
    } catch (const Error& e) {
        CHECK(e.code() == errc::parse);
    }
}

TEST_CASE("scalar field dump round trips to float precision") {
    TempDir tmp;
    VoxelGrid grid;
    grid.origin = Vec3(-0.5, 0.25, 1.0);
    grid.h = 0.125;
    grid.nx = 5;
    grid.ny = 4;
    grid.nz = 3;
    ScalarField f(grid);
    Rng rng(8);
    for (double& v : f.values) v = rng.next_gaussian();
    write_scalar_field(tmp.file("f.sf"), f);
    auto r = read_scalar_field(tmp.file("f.sf"));
    CHECK(r.grid.nx == grid.nx);
    CHECK(r.grid.ny == grid.ny);
    CHECK(r.grid.nz == grid.nz);
    CHECK(float(r.grid.h) == float(grid.h));
    REQUIRE(r.values.size() == f.values.size());
    for (size_t i = 0; i < f.values.size(); ++i) CHECK(float(r.values[i]) == float(f.values[i]));
}
