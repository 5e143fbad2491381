#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <scanvol/error.hpp>
#include <scanvol/io.hpp>
#include <scanvol/mesh_primitives.hpp>
#include <scanvol/pipeline.hpp>
#include <scanvol/rgbd.hpp>
#include <scanvol/synth.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <unistd.h>

using namespace scanvol;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("scanvol_pipe_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

DepthImage flat_depth(int w, int h, double z) {
    DepthImage d;
    d.width = w;
    d.height = h;
    d.depth.assign(static_cast<size_t>(w) * h, z);
    return d;
}

// box on a textured floor, the staple scene for alignment tests
Scene box_scene(double side) {
    Scene s;
    s.ground_plane = true;
    RigidMotion pose;
    pose.t = Vec3(0, 0, side / 2);
    s.primitives.push_back(make_box(Vec3(side, side, side), pose));
    return s;
}

ViewData render_view(const Scene& scene, const RigidMotion& cam, const CameraIntrinsics& K,
                     const std::string& name) {
    RenderedView r = render_depth(scene, cam, K);
    return ViewData{name, std::move(r.depth), std::move(r.gray), K};
}

const CameraIntrinsics kK{525.0, 525.0, 319.5, 239.5, 640, 480};

OrientedPointCloud sphere_cloud_inward(int count, double r, const Vec3& center, uint64_t seed) {
    OrientedPointCloud c;
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        Vec3 dir(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        dir.normalize();
        c.points.push_back(center + r * dir);
        c.normals.push_back(-dir);  // fused scans carry into-the-solid normals
    }
    return c;
}

}  // namespace

TEST_CASE("feature backprojection interpolates depth and guards the footprint") {
    CameraIntrinsics K{100.0, 100.0, 10.0, 7.0, 20, 15};
    DepthImage d = flat_depth(20, 15, 1.0);

    auto x = backproject_feature(d, K, 5.25, 6.5);
    REQUIRE(x.has_value());
    CHECK((*x - backproject_pixel(5.25, 6.5, 1.0, K)).norm() < 1e-15);

    CHECK_FALSE(backproject_feature(d, K, 19.1, 6.0).has_value());  // footprint off the edge
    CHECK_FALSE(backproject_feature(d, K, 5.0, -0.5).has_value());

    DepthImage holed = d;
    holed.at(6, 6) = 0.0;
    CHECK_FALSE(backproject_feature(holed, K, 5.7, 5.7).has_value());
    CHECK(backproject_feature(holed, K, 3.2, 3.2).has_value());

    DepthImage stepped = d;
    for (int v = 0; v < 15; ++v)
        for (int u = 10; u < 20; ++u) stepped.at(u, v) = 2.0;
    CHECK_FALSE(backproject_feature(stepped, K, 9.5, 3.0).has_value());  // depth jump
    CHECK(backproject_feature(stepped, K, 12.5, 3.0).has_value());      // flat again past it
}

TEST_CASE("object crop keeps the object and a narrow skirt") {
    OrientedPointCloud cloud;
    auto add = [&](double x, double y, double z) {
        cloud.points.emplace_back(x, y, z);
        cloud.normals.push_back(Vec3::UnitZ());
    };
    for (int j = -60; j <= 60; ++j)
        for (int i = -60; i <= 60; ++i) add(i * 0.005, j * 0.005, 0.0);  // floor
    for (int j = -10; j <= 10; ++j)
        for (int i = -10; i <= 10; ++i) add(i * 0.005, j * 0.005, 0.05);  // object top
    add(0.25, 0.25, 0.30);  // isolated spikes must not stretch the crop box
    add(-0.27, 0.1, 0.25);
    add(0.05, -0.28, 0.40);
    for (int k = 0; k < 5; ++k) add(0.01 * k, 0, -0.05);  // junk below the floor

    Plane plane;
    plane.normal = Vec3(0, 0, 1);
    plane.d = 0.0;
    size_t object_points = 0;
    OrientedPointCloud out = crop_to_object(cloud, plane, 0.005, 0.15, 0.015, &object_points);
    CHECK(object_points == 21 * 21 + 3);

    // margin = max(0.015, 0.15 * 0.1); nothing below the plane or beyond it
    bool kept_near_skirt = false;
    for (const Vec3& p : out.points) {
        CHECK(p.z() > -0.011);
        CHECK(std::abs(p.x()) < 0.066);
        CHECK(std::abs(p.y()) < 0.066);
        if (p.z() == 0.0 && std::abs(p.x()) > 0.055) kept_near_skirt = true;
    }
    CHECK(kept_near_skirt);
    CHECK(out.size() > 21 * 21);  // object plus some floor

    // nothing voted above the plane: the crop has no object to keep
    OrientedPointCloud floor_only;
    for (int j = 0; j < 40; ++j)
        for (int i = 0; i < 40; ++i) {
            floor_only.points.emplace_back(i * 0.01, j * 0.01, 0.0);
            floor_only.normals.push_back(Vec3::UnitZ());
        }
    CHECK_THROWS_AS(crop_to_object(floor_only, plane, 0.005, 0.15, 0.015, nullptr), Error);

    // scattered votes never reach the per-cell quorum either
    OrientedPointCloud sparse = floor_only;
    for (int k = 0; k < 6; ++k) {
        sparse.points.emplace_back(0.05 * k, 0.2, 0.1);
        sparse.normals.push_back(Vec3::UnitZ());
    }
    CHECK_THROWS_AS(crop_to_object(sparse, plane, 0.005, 0.15, 0.015, nullptr), Error);
}

TEST_CASE("below-plane trimming drops exactly the sunken faces") {
    BoxMeshOptions opt;
    opt.resolution = 4;
    TriangleMesh box = make_box_mesh(Vec3(0.1, 0.1, 0.1), Vec3(0, 0, -0.04), opt);
    Plane plane;
    plane.normal = Vec3(0, 0, 1);
    plane.d = 0.0;
    size_t dropped = 0;
    TriangleMesh trimmed = trim_mesh_below_plane(box, plane, 0.01, &dropped);
    // the bottom (32 faces) and the lowest quad row of each side (32 more)
    CHECK(dropped == 64);
    CHECK(trimmed.face_count() == box.face_count() - dropped);
    CHECK_NOTHROW(trimmed.validate());
    for (const auto& f : trimmed.faces) {
        Vec3 c = (trimmed.vertices[f[0]] + trimmed.vertices[f[1]] + trimmed.vertices[f[2]]) / 3.0;
        CHECK(plane.signed_distance(c) >= -0.01 - 1e-12);
    }
    // vertex array is compacted: every vertex is referenced
    std::vector<bool> used(trimmed.vertices.size(), false);
    for (const auto& f : trimmed.faces)
        for (int k = 0; k < 3; ++k) used[f[k]] = true;
    for (bool u : used) CHECK(u);
    CHECK(trimmed.vertices.size() < box.vertices.size());

    // a margin large enough keeps everything, and dropping all faces is legal
    TriangleMesh all = trim_mesh_below_plane(box, plane, 1.0, &dropped);
    CHECK(dropped == 0);
    CHECK(all.face_count() == box.face_count());
    Plane high;
    high.normal = Vec3(0, 0, 1);
    high.d = 10.0;
    TriangleMesh none = trim_mesh_below_plane(box, high, 0.0, &dropped);
    CHECK(none.face_count() == 0);
    CHECK(dropped == box.face_count());
}

TEST_CASE("align_views rejects malformed inputs") {
    CHECK_THROWS_AS(align_views({}, {}, {}, 1), Error);

    Scene s = box_scene(0.1);
    ViewData v = render_view(s, look_at(Vec3(0.6, 0, 0.8), Vec3(0, 0, 0.05)), kK, "a");
    std::vector<ViewData> views{v, v};
    std::vector<OrientedPointCloud> clouds(1);
    CHECK_THROWS_AS(align_views(views, clouds, {}, 1), Error);  // one cloud missing

    ViewData blind = v;
    blind.gray = GrayImage{};
    std::vector<ViewData> no_gray{v, blind};
    std::vector<OrientedPointCloud> two(2);
    try {
        align_views(no_gray, two, {}, 1);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == errc::config);
    }
}

TEST_CASE("aligning a view against itself lands on the identity") {
    Scene s = box_scene(0.1);
    RigidMotion cam = look_at(Vec3(0.6, 0.1, 0.8), Vec3(0, 0, 0.05));
    ViewData a = render_view(s, cam, kK, "a");
    ViewData b = a;
    b.name = "b";
    std::vector<ViewData> views{std::move(a), std::move(b)};
    std::vector<OrientedPointCloud> clouds;
    for (const auto& v : views) clouds.push_back(estimate_normals(v.depth, v.intrinsics));

    auto placed = align_views(views, clouds, {}, 1);
    REQUIRE(placed.size() == 2);
    CHECK(placed[0].reference == -1);
    CHECK((placed[0].pose.R - Mat3::Identity()).norm() < 1e-15);
    CHECK(placed[1].reference == 0);
    CHECK(placed[1].correspondences >= 10);
    CHECK(rotation_angle(placed[1].pose.R, Mat3::Identity()) < 0.1 * std::numbers::pi / 180.0);
    CHECK(placed[1].pose.t.norm() < 0.002);
}

TEST_CASE("two ring views recover their true relative pose") {
    Scene s = box_scene(0.1);
    auto ring = camera_ring(12, 0.6, 0.8, Vec3(0, 0, 0.045));
    ViewData a = render_view(s, ring[0], kK, "a");
    ViewData b = render_view(s, ring[1], kK, "b");
    std::vector<ViewData> views{std::move(a), std::move(b)};
    std::vector<OrientedPointCloud> clouds;
    for (const auto& v : views) clouds.push_back(estimate_normals(v.depth, v.intrinsics));

    auto placed = align_views(views, clouds, {}, 1);
    RigidMotion truth = ring[0].inverse().compose(ring[1]);
    RigidMotion err = placed[1].pose.compose(truth.inverse());
    CHECK(rotation_angle(err.R, Mat3::Identity()) < 0.5 * std::numbers::pi / 180.0);
    CHECK((placed[1].pose.t - truth.t).norm() < 0.005);
    CHECK(placed[1].icp_accepted);
    CHECK(placed[1].ransac_inliers >= 10);
}

TEST_CASE("textureless views cannot be aligned") {
    ViewData a;
    a.name = "a";
    a.intrinsics = CameraIntrinsics{200.0, 200.0, 79.5, 59.5, 160, 120};
    a.depth = flat_depth(160, 120, 1.0);
    a.gray.width = 160;
    a.gray.height = 120;
    a.gray.pixels.assign(160 * 120, 0.5f);  // featureless wall
    ViewData b = a;
    b.name = "b";
    std::vector<ViewData> views{std::move(a), std::move(b)};
    std::vector<OrientedPointCloud> clouds;
    for (const auto& v : views) clouds.push_back(estimate_normals(v.depth, v.intrinsics));
    try {
        align_views(views, clouds, {}, 1);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == errc::alignment_failure);
        CHECK(std::string(e.what()).find("b") != std::string::npos);
    }
}

TEST_CASE("surface reconstruction recovers an analytic sphere") {
    const double r = 0.2;
    const Vec3 center(0.3, 0.3, 0.3);
    OrientedPointCloud cloud = sphere_cloud_inward(20000, r, center, 7);
    ReconstructionConfig cfg;
    cfg.grid_resolution = 64;
    ReconstructionResult res = reconstruct_surface(cloud, cfg);

    MeshTopology topo = analyze_topology(res.mesh);
    CHECK(topo.watertight);
    CHECK(topo.euler_characteristic == 2);

    double rms = 0.0;
    for (const Vec3& v : res.mesh.vertices) {
        double e = (v - center).norm() - r;
        rms += e * e;
    }
    rms = std::sqrt(rms / res.mesh.vertices.size());
    CHECK(rms < res.field.grid.h);

    CHECK(std::abs(mesh_volume_tetrahedra(res.mesh) - 4.0 / 3.0 * std::numbers::pi * r * r * r) <
          0.03 * 4.0 / 3.0 * std::numbers::pi * r * r * r);

    // interior sits on the high side of the extracted level set
    CHECK(res.field.sample(center) > res.isovalue);
    CHECK_THROWS_AS(reconstruct_surface(OrientedPointCloud{}, cfg), Error);
}

TEST_CASE("five ring views measure a box end to end") {
    const double side = 0.1;
    Scene s = box_scene(side);
    auto ring = camera_ring(5, 0.6, 0.8, Vec3(0, 0, 0.045));
    std::vector<ViewData> views;
    for (size_t k = 0; k < ring.size(); ++k)
        views.push_back(render_view(s, ring[k], kK, "v" + std::to_string(k)));

    PipelineConfig cfg;
    cfg.recon.grid_resolution = 64;
    TempDir out;
    PipelineReport report = run_pipeline(views, cfg, out.path.string());

    const double truth = side * side * side;
    CHECK(report.plane_found);
    CHECK(report.volume.aligned);
    CHECK_FALSE(report.volume.unreliable);
    CHECK(std::abs(report.volume.volume - truth) < 0.05 * truth);
    CHECK(std::abs(report.volume.volume_tetra - truth) < 0.05 * truth);
    CHECK(report.volume.support_gap < 2.0 * report.volume.mean_edge_length);
    CHECK(report.alignment.size() == 5);
    CHECK(report.mesh_faces > 0);

    // outputs reload to exactly what the report says
    TriangleMesh mesh = read_mesh_ply((out.path / "mesh.ply").string());
    CHECK(mesh.face_count() == report.mesh_faces);
    CHECK(mesh.vertices.size() == report.mesh_vertices);
    OrientedPointCloud merged = read_cloud_ply((out.path / "merged.ply").string());
    CHECK(merged.size() == report.merged_points);
    for (const auto& a : report.alignment) {
        RigidMotion g = read_pose((out.path / ("pose_" + a.name + ".txt")).string());
        CHECK(g.R == a.pose.R);
        CHECK(g.t == a.pose.t);
    }
    Plane plane = read_plane((out.path / "plane.txt").string());
    CHECK(plane.normal == report.plane.normal);
    CHECK(plane.d == report.plane.d);
    CHECK(std::filesystem::exists(out.path / "report.txt"));
    CHECK(std::filesystem::exists(out.path / "report.json"));

    // a second run is deterministic apart from timings
    PipelineReport again = run_pipeline(views, cfg, "");
    CHECK(report_json(again, false) == report_json(report, false));
    CHECK(report_text(report).find("volume") != std::string::npos);
}
