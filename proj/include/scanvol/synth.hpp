#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scanvol/image.hpp"
#include "scanvol/math.hpp"
#include "scanvol/registration.hpp"
#include "scanvol/volume.hpp"

namespace scanvol {

enum class PrimitiveKind { Sphere, Box, Cylinder };

// Local frames: sphere centered at the origin; box centered at the origin
// with full side lengths `extents`; cylinder axis +z with the base disc at
// z = 0 and the top at z = height.
struct Primitive {
    PrimitiveKind kind = PrimitiveKind::Sphere;
    double radius = 0.0;
    Vec3 extents = Vec3::Zero();
    double height = 0.0;
    RigidMotion pose;  // local -> world

    double min_world_z() const;  // lowest point, for ground-contact checks
};

Primitive make_sphere(double radius, const Vec3& center);
Primitive make_box(const Vec3& extents, const RigidMotion& pose);
Primitive make_cylinder(double radius, double height, const RigidMotion& pose);

double analytic_volume(const Primitive& p);

enum class TextureKind { Noise, Checker };

struct Scene {
    std::vector<Primitive> primitives;
    bool ground_plane = false;  // the z = 0 plane
    TextureKind texture = TextureKind::Noise;
    double texture_scale = 0.05;  // meters per feature
    uint64_t texture_seed = 1;

    // Throws if a primitive dips below the ground plane (contact is allowed).
    void validate() const;
};

struct RenderedView {
    DepthImage depth;
    GrayImage gray;
};

// Analytic ray casting: each pixel's ray (integer pixel grid, matching the
// backprojection convention) is intersected with every primitive and the
// ground plane; depth is the camera-frame z of the nearest hit, the gray
// value is the world-anchored procedural texture at the hit point. Misses
// are invalid pixels. camera_pose maps camera frame to world.
RenderedView render_depth(const Scene& scene, const RigidMotion& camera_pose,
                          const CameraIntrinsics& K);

// World-anchored texture value in [0, 1] (exposed for tests).
double texture_value(const Scene& scene, const Vec3& world_point);

// Gaussian depth noise per valid pixel plus a Bernoulli(outlier_fraction)
// chance of replacement with a uniform draw in [0.2, 2.0] x the true depth.
// Keyed per pixel, so the result is independent of traversal order.
DepthImage corrupt_depth(const DepthImage& input, double noise_sigma, double outlier_fraction,
                         uint64_t seed);

// Replaces exactly round(outlier_fraction * n) correspondences with uniform
// random valid pixels of the target view (p1 and x1 rewritten).
std::vector<Correspondence> corrupt_correspondences(const std::vector<Correspondence>& input,
                                                    double outlier_fraction, uint64_t seed,
                                                    const DepthImage& target_depth,
                                                    const CameraIntrinsics& K);

// Camera-to-world pose looking from eye toward target, x right, y down,
// z forward (the depth convention used everywhere in this project).
RigidMotion look_at(const Vec3& eye, const Vec3& target);

// `count` poses evenly spaced on a circle of `radius` at height `height`,
// all looking at `target`.
std::vector<RigidMotion> camera_ring(int count, double radius, double height, const Vec3& target);

struct SceneConfig {
    Scene scene;
    CameraIntrinsics intrinsics{525.0, 525.0, 319.5, 239.5, 640, 480};
    int ring_count = 8;
    double ring_radius = 0.8;
    double ring_height = 0.5;
    Vec3 ring_target = Vec3::Zero();
    double noise_sigma = 0.0;
    double outlier_fraction = 0.0;
    uint64_t seed = 1;
};

// Plain-text scene description, one directive per line, '#' comments:
//   sphere R TX TY TZ            box EX EY EZ TX TY TZ [YAW_DEG]
//   cylinder R H TX TY TZ        ground_plane
//   texture noise|checker SCALE  ring COUNT RADIUS HEIGHT TX TY TZ
//   intrinsics FU FV CU CV W H   noise SIGMA OUTLIER_FRACTION
//   seed N
SceneConfig load_scene_config(const std::string& path);

}  // namespace scanvol
