#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <scanvol/cloud.hpp>
#include <scanvol/error.hpp>
#include <scanvol/rgbd.hpp>
#include <scanvol/synth.hpp>

#include <cmath>

using namespace scanvol;

namespace {

OrientedPointCloud small_cloud() {
    OrientedPointCloud c;
    c.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 2, 1)};
    c.normals = {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    c.colors = {{10, 20, 30}, {40, 50, 60}, {70, 80, 90}};
    return c;
}

double sphere_rms(const OrientedPointCloud& cloud, const Vec3& center, double r) {
    double sum = 0.0;
    for (const Vec3& p : cloud.points) {
        double e = (p - center).norm() - r;
        sum += e * e;
    }
    return std::sqrt(sum / cloud.size());
}

}  // namespace

TEST_CASE("validate accepts a well-formed cloud") {
    CHECK_NOTHROW(small_cloud().validate());
    OrientedPointCloud empty;
    CHECK_NOTHROW(empty.validate());
}

TEST_CASE("validate rejects malformed clouds") {
    auto c = small_cloud();
    c.normals.pop_back();
    CHECK_THROWS_AS(c.validate(), Error);

    c = small_cloud();
    c.colors.pop_back();
    CHECK_THROWS_AS(c.validate(), Error);

    c = small_cloud();
    c.points[1] = Vec3(std::nan(""), 0, 0);
    CHECK_THROWS_AS(c.validate(), Error);

    c = small_cloud();
    c.normals[0] = Vec3(0, 0, 2);
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("transformed moves points and rotates normals") {
    auto c = small_cloud();
    RigidMotion g = RigidMotion::from_axis_angle(Vec3::UnitZ(), 0.5, Vec3(1, -2, 3));
    auto t = c.transformed(g);
    REQUIRE(t.size() == c.size());
    for (size_t i = 0; i < c.size(); ++i) {
        CHECK((t.points[i] - g.apply(c.points[i])).norm() < 1e-14);
        CHECK((t.normals[i] - g.rotate(c.normals[i])).norm() < 1e-14);
        CHECK(t.colors[i] == c.colors[i]);
    }
    t.validate();
}

TEST_CASE("append concatenates and tracks colors") {
    auto a = small_cloud();
    auto b = small_cloud();
    a.append(b);
    CHECK(a.size() == 6);
    CHECK(a.colors.size() == 6);
    CHECK(a.points[3] == b.points[0]);

    // appending a colorless cloud drops colors rather than desyncing
    OrientedPointCloud plain;
    plain.points = {Vec3(9, 9, 9)};
    plain.normals = {Vec3(0, 0, 1)};
    a.append(plain);
    CHECK(a.size() == 7);
    CHECK_FALSE(a.has_colors());
    a.validate();
}

TEST_CASE("bounding box spans exactly the point extremes") {
    auto c = small_cloud();
    auto box = bounding_box(c);
    CHECK((box.min() - Vec3(0, 0, 0)).norm() == 0.0);
    CHECK((box.max() - Vec3(1, 2, 1)).norm() == 0.0);
}

TEST_CASE("voxel thinning averages within cells in first-visit order") {
    OrientedPointCloud c;
    c.points = {Vec3(0.01, 0, 0), Vec3(0.25, 0, 0), Vec3(0.02, 0, 0)};
    c.normals = {Vec3(0, 0, 1), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    c.colors = {{100, 0, 0}, {0, 0, 0}, {200, 0, 0}};

    auto t = voxel_thin(c, 0.1);
    REQUIRE(t.size() == 2);
    // cell of the first point comes first even though the third point also lands there
    CHECK((t.points[0] - Vec3(0.015, 0, 0)).norm() < 1e-12);
    CHECK((t.points[1] - Vec3(0.25, 0, 0)).norm() < 1e-12);
    CHECK((t.normals[0] - Vec3(0, 0, 1)).norm() < 1e-12);
    CHECK(int(t.colors[0][0]) == 150);
    t.validate();
}

TEST_CASE("voxel thinning falls back when normals cancel") {
    OrientedPointCloud c;
    c.points = {Vec3(0.01, 0, 0), Vec3(0.02, 0, 0)};
    c.normals = {Vec3(0, 0, 1), Vec3(0, 0, -1)};
    auto t = voxel_thin(c, 0.1);
    REQUIRE(t.size() == 1);
    CHECK((t.normals[0] - Vec3(0, 0, 1)).norm() == 0.0);
}

TEST_CASE("voxel thinning with non-positive cell is the identity") {
    auto c = small_cloud();
    auto t = voxel_thin(c, 0.0);
    CHECK(t.size() == c.size());
    for (size_t i = 0; i < c.size(); ++i) CHECK(t.points[i] == c.points[i]);
}

TEST_CASE("merging a single view at identity returns the input") {
    auto c = small_cloud();
    auto m = merge_views({c}, {RigidMotion::identity()});
    REQUIRE(m.size() == c.size());
    for (size_t i = 0; i < c.size(); ++i) {
        CHECK((m.points[i] - c.points[i]).norm() == 0.0);
        CHECK((m.normals[i] - c.normals[i]).norm() == 0.0);
    }
}

TEST_CASE("merging two copies with a translation offsets the second half") {
    auto c = small_cloud();
    RigidMotion shift = RigidMotion::identity();
    shift.t = Vec3(0.5, 0, -0.25);
    auto m = merge_views({c, c}, {RigidMotion::identity(), shift});
    REQUIRE(m.size() == 2 * c.size());
    for (size_t i = 0; i < c.size(); ++i) {
        CHECK((m.points[i] - c.points[i]).norm() == 0.0);
        CHECK((m.points[c.size() + i] - (c.points[i] + shift.t)).norm() < 1e-15);
        CHECK((m.normals[c.size() + i] - c.normals[i]).norm() == 0.0);
    }
}

TEST_CASE("merge_views validates arity and emptiness") {
    auto c = small_cloud();
    CHECK_THROWS_AS(merge_views({c}, {}), Error);
    CHECK_THROWS_AS(merge_views({}, {}), Error);
    OrientedPointCloud empty;
    CHECK_THROWS_AS(merge_views({empty}, {RigidMotion::identity()}), Error);
}

TEST_CASE("two opposing half-sphere views merge without doubling the error") {
    CameraIntrinsics K;
    K.fu = K.fv = 300.0;
    K.cu = 159.5;
    K.cv = 119.5;
    K.width = 320;
    K.height = 240;

    const double r = 0.3;
    Scene scene;
    scene.primitives.push_back(make_sphere(r, Vec3::Zero()));

    RigidMotion cam0 = look_at(Vec3(1.2, 0, 0), Vec3::Zero());
    RigidMotion cam1 = look_at(Vec3(-1.2, 0, 0), Vec3::Zero());
    auto v0 = render_depth(scene, cam0, K);
    auto v1 = render_depth(scene, cam1, K);
    auto c0 = estimate_normals(v0.depth, K);
    auto c1 = estimate_normals(v1.depth, K);

    double single = sphere_rms(c0.transformed(cam0), Vec3::Zero(), r);
    auto merged = merge_views({c0, c1}, {cam0, cam1});
    CHECK(merged.size() == c0.size() + c1.size());
    CHECK(sphere_rms(merged, Vec3::Zero(), r) < 2.0 * single);
}

TEST_CASE("merge_views thinning bounds the output by the cell budget") {
    auto c = small_cloud();
    auto m = merge_views({c, c}, {RigidMotion::identity(), RigidMotion::identity()}, 0.05);
    // duplicate points collapse back to one per occupied cell
    CHECK(m.size() == c.size());
    m.validate();
}
