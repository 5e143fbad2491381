#include "scanvol/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "scanvol/error.hpp"
#include "scanvol/rgbd.hpp"

namespace scanvol {

namespace {

double lattice_value(uint64_t seed, long ix, long iy, long iz) {
    uint64_t h = hash_combine(seed, static_cast<uint64_t>(ix) * 0x8da6b343ull);
    h = hash_combine(h, static_cast<uint64_t>(iy) * 0xd8163841ull);
    h = hash_combine(h, static_cast<uint64_t>(iz) * 0xcb1ab31full);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(uint64_t seed, const Vec3& p) {
    long ix = static_cast<long>(std::floor(p.x()));
    long iy = static_cast<long>(std::floor(p.y()));
    long iz = static_cast<long>(std::floor(p.z()));
    double fx = smoothstep(p.x() - ix), fy = smoothstep(p.y() - iy), fz = smoothstep(p.z() - iz);
    double acc = 0.0;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                double w = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy) * (dz ? fz : 1 - fz);
                acc += w * lattice_value(seed, ix + dx, iy + dy, iz + dz);
            }
    return acc;
}

struct Hit {
    double s = std::numeric_limits<double>::infinity();
    bool valid = false;
};

Hit nearer(Hit a, double s) {
    if (s > 1e-9 && s < a.s) {
        a.s = s;
        a.valid = true;
    }
    return a;
}

Hit intersect_sphere(const Vec3& o, const Vec3& d, double r) {
    // |o + s d|^2 = r^2 in the primitive's local frame
    double a = d.squaredNorm();
    double b = 2.0 * o.dot(d);
    double c = o.squaredNorm() - r * r;
    double disc = b * b - 4.0 * a * c;
    Hit h;
    if (disc < 0.0) return h;
    double sq = std::sqrt(disc);
    h = nearer(h, (-b - sq) / (2.0 * a));
    h = nearer(h, (-b + sq) / (2.0 * a));
    return h;
}

Hit intersect_box(const Vec3& o, const Vec3& d, const Vec3& extents) {
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        double half = 0.5 * extents[a];
        if (d[a] == 0.0) {
            if (std::fabs(o[a]) > half) return {};
            continue;
        }
        double ta = (-half - o[a]) / d[a];
        double tb = (half - o[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return {};
    }
    Hit h;
    h = nearer(h, t0);
    h = nearer(h, t1);
    return h;
}

Hit intersect_cylinder(const Vec3& o, const Vec3& d, double r, double height) {
    Hit h;
    // Side: x^2 + y^2 = r^2 with z in [0, height].
    double a = d.x() * d.x() + d.y() * d.y();
    if (a > 0.0) {
        double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
        double c = o.x() * o.x() + o.y() * o.y() - r * r;
        double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            double sq = std::sqrt(disc);
            for (double s : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
                double z = o.z() + s * d.z();
                if (z >= 0.0 && z <= height) h = nearer(h, s);
            }
        }
    }
    // Caps at z = 0 and z = height.
    if (d.z() != 0.0) {
        for (double zc : {0.0, height}) {
            double s = (zc - o.z()) / d.z();
            double x = o.x() + s * d.x(), y = o.y() + s * d.y();
            if (x * x + y * y <= r * r) h = nearer(h, s);
        }
    }
    return h;
}

Hit intersect_primitive(const Primitive& p, const Vec3& origin, const Vec3& dir) {
    RigidMotion inv = p.pose.inverse();
    Vec3 o = inv.apply(origin);
    Vec3 d = inv.rotate(dir);
    switch (p.kind) {
        case PrimitiveKind::Sphere:
            return intersect_sphere(o, d, p.radius);
        case PrimitiveKind::Box:
            return intersect_box(o, d, p.extents);
        case PrimitiveKind::Cylinder:
            return intersect_cylinder(o, d, p.radius, p.height);
    }
    return {};
}

}  // namespace

double Primitive::min_world_z() const {
    switch (kind) {
        case PrimitiveKind::Sphere:
            return pose.t.z() - radius;
        case PrimitiveKind::Box: {
            double lo = std::numeric_limits<double>::infinity();
            for (int c = 0; c < 8; ++c) {
                Vec3 corner(((c & 1) ? 0.5 : -0.5) * extents.x(), ((c & 2) ? 0.5 : -0.5) * extents.y(),
                            ((c & 4) ? 0.5 : -0.5) * extents.z());
                lo = std::min(lo, pose.apply(corner).z());
            }
            return lo;
        }
        case PrimitiveKind::Cylinder: {
            Vec3 axis = pose.rotate(Vec3(0, 0, 1));
            double rim = radius * std::sqrt(std::max(0.0, 1.0 - axis.z() * axis.z()));
            double base = pose.t.z() - rim;
            double top = pose.t.z() + height * axis.z() - rim;
            return std::min(base, top);
        }
    }
    return 0.0;
}

Primitive make_sphere(double radius, const Vec3& center) {
    if (radius <= 0.0) throw Error(errc::config, "sphere radius must be positive");
    Primitive p;
    p.kind = PrimitiveKind::Sphere;
    p.radius = radius;
    p.pose.t = center;
    return p;
}

Primitive make_box(const Vec3& extents, const RigidMotion& pose) {
    if (extents.minCoeff() <= 0.0) throw Error(errc::config, "box extents must be positive");
    Primitive p;
    p.kind = PrimitiveKind::Box;
    p.extents = extents;
    p.pose = pose;
    return p;
}

Primitive make_cylinder(double radius, double height, const RigidMotion& pose) {
    if (radius <= 0.0 || height <= 0.0)
        throw Error(errc::config, "cylinder radius and height must be positive");
    Primitive p;
    p.kind = PrimitiveKind::Cylinder;
    p.radius = radius;
    p.height = height;
    p.pose = pose;
    return p;
}

double analytic_volume(const Primitive& p) {
    switch (p.kind) {
        case PrimitiveKind::Sphere:
            return 4.0 / 3.0 * std::numbers::pi * p.radius * p.radius * p.radius;
        case PrimitiveKind::Box:
            return p.extents.x() * p.extents.y() * p.extents.z();
        case PrimitiveKind::Cylinder:
            return std::numbers::pi * p.radius * p.radius * p.height;
    }
    return 0.0;
}

void Scene::validate() const {
    if (!ground_plane) return;
    for (const Primitive& p : primitives)
        if (p.min_world_z() < -1e-9)
            throw Error(errc::config, "scene: primitive extends below the ground plane");
}

double texture_value(const Scene& scene, const Vec3& world_point) {
    if (scene.texture == TextureKind::Checker) {
        long sum = static_cast<long>(std::floor(world_point.x() / scene.texture_scale)) +
                   static_cast<long>(std::floor(world_point.y() / scene.texture_scale)) +
                   static_cast<long>(std::floor(world_point.z() / scene.texture_scale));
        return (sum & 1) ? 0.9 : 0.1;
    }
    // Several octaves of value noise. Feature matching needs distinctive
    // micro-structure inside a descriptor footprint, so the stack reaches
    // well below texture_scale and the fine octaves keep real weight.
    double f = 1.0 / scene.texture_scale;
    double acc = 0.0, amp = 1.0, total = 0.0;
    for (int o = 0; o < 5; ++o) {
        acc += amp * value_noise(scene.texture_seed + o, world_point * (f * (1 << o)));
        total += amp;
        amp *= 0.6;
    }
    double v = acc / total;
    return std::clamp(0.5 + 1.8 * (v - 0.5), 0.0, 1.0);
}

RenderedView render_depth(const Scene& scene, const RigidMotion& camera_pose,
                          const CameraIntrinsics& K) {
    if (!K.valid()) throw Error(errc::config, "render: invalid intrinsics");
    scene.validate();
    RenderedView view;
    view.depth.width = K.width;
    view.depth.height = K.height;
    view.depth.depth.assign(static_cast<size_t>(K.width) * K.height, 0.0);
    view.gray.width = K.width;
    view.gray.height = K.height;
    view.gray.pixels.assign(static_cast<size_t>(K.width) * K.height, 0.0f);

    const Vec3 origin = camera_pose.t;
#pragma omp parallel for schedule(static)
    for (int v = 0; v < K.height; ++v)
        for (int u = 0; u < K.width; ++u) {
            // Unnormalized ray with unit camera-frame z, so the ray parameter
            // of a hit IS its depth and backprojection inverts it exactly.
            Vec3 dir_cam((u - K.cu) / K.fu, (v - K.cv) / K.fv, 1.0);
            Vec3 dir = camera_pose.rotate(dir_cam);

            Hit best;
            for (const Primitive& p : scene.primitives) {
                Hit h = intersect_primitive(p, origin, dir);
                if (h.valid && h.s < best.s) best = h;
            }
            if (scene.ground_plane && dir.z() != 0.0) {
                double s = -origin.z() / dir.z();
                if (s > 1e-9 && s < best.s) {
                    best.s = s;
                    best.valid = true;
                }
            }
            if (!best.valid) continue;
            size_t idx = static_cast<size_t>(v) * K.width + u;
            view.depth.depth[idx] = best.s;
            view.gray.pixels[idx] = static_cast<float>(texture_value(scene, origin + best.s * dir));
        }
    return view;
}

DepthImage corrupt_depth(const DepthImage& input, double noise_sigma, double outlier_fraction,
                         uint64_t seed) {
    if (outlier_fraction < 0.0 || outlier_fraction >= 1.0)
        throw Error(errc::config, "corrupt: outlier fraction must be in [0, 1)");
    DepthImage out = input;
    const long n = static_cast<long>(out.depth.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        if (!(std::isfinite(out.depth[i]) && out.depth[i] > 0.0)) continue;
        Rng rng(hash_combine(hash_combine(seed, static_cast<uint64_t>(i)), 0x646570746872ull));
        if (outlier_fraction > 0.0 && rng.next_double() < outlier_fraction) {
            out.depth[i] *= 0.2 + 1.8 * rng.next_double();
        } else if (noise_sigma > 0.0) {
            out.depth[i] += noise_sigma * rng.next_gaussian();
            if (out.depth[i] <= 0.0) out.depth[i] = 0.0;  // pushed through the camera: invalid
        }
    }
    return out;
}

std::vector<Correspondence> corrupt_correspondences(const std::vector<Correspondence>& input,
                                                    double outlier_fraction, uint64_t seed,
                                                    const DepthImage& target_depth,
                                                    const CameraIntrinsics& K) {
    if (outlier_fraction < 0.0 || outlier_fraction >= 1.0)
        throw Error(errc::config, "corrupt: outlier fraction must be in [0, 1)");
    std::vector<Correspondence> out = input;
    size_t count = static_cast<size_t>(std::llround(outlier_fraction * static_cast<double>(out.size())));
    if (count == 0) return out;

    Rng rng(hash_combine(seed, 0x636f7272ull));
    std::vector<size_t> order(out.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.next_below(i)]);

    for (size_t k = 0; k < count; ++k) {
        Correspondence& c = out[order[k]];
        for (int attempt = 0; attempt < 1000; ++attempt) {
            int u = static_cast<int>(rng.next_below(static_cast<uint64_t>(K.width)));
            int v = static_cast<int>(rng.next_below(static_cast<uint64_t>(K.height)));
            if (!target_depth.is_valid(u, v)) continue;
            c.p1 = Vec2(u, v);
            c.x1 = backproject_pixel(u, v, target_depth.at(u, v), K);
            break;
        }
    }
    return out;
}

RigidMotion look_at(const Vec3& eye, const Vec3& target) {
    Vec3 forward = target - eye;
    if (forward.norm() < 1e-12) throw Error(errc::config, "look_at: eye equals target");
    forward.normalize();
    Vec3 up(0, 0, 1);
    if (forward.cross(up).norm() < 1e-9) up = Vec3(0, 1, 0);
    Vec3 right = forward.cross(up).normalized();
    Vec3 down = forward.cross(right);  // y axis points down in the camera frame
    RigidMotion g;
    g.R.col(0) = right;
    g.R.col(1) = down;
    g.R.col(2) = forward;
    g.t = eye;
    return g;
}

std::vector<RigidMotion> camera_ring(int count, double radius, double height, const Vec3& target) {
    if (count < 1) throw Error(errc::config, "camera ring: count must be positive");
    std::vector<RigidMotion> poses;
    poses.reserve(count);
    for (int k = 0; k < count; ++k) {
        double theta = 2.0 * std::numbers::pi * k / count;
        Vec3 eye(radius * std::cos(theta), radius * std::sin(theta), height);
        poses.push_back(look_at(eye, target));
    }
    return poses;
}

SceneConfig load_scene_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io, "cannot open scene file: " + path);
    SceneConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;

        auto need = [&](double& x) {
            if (!(ls >> x))
                throw Error(errc::parse, "scene line " + std::to_string(line_no) + ": expected number");
        };
        try {
            if (word == "sphere") {
                double r, tx, ty, tz;
                need(r), need(tx), need(ty), need(tz);
                cfg.scene.primitives.push_back(make_sphere(r, Vec3(tx, ty, tz)));
            } else if (word == "box") {
                double ex, ey, ez, tx, ty, tz, yaw = 0.0;
                need(ex), need(ey), need(ez), need(tx), need(ty), need(tz);
                ls >> yaw;
                RigidMotion pose = RigidMotion::from_axis_angle(
                    Vec3(0, 0, 1), yaw * std::numbers::pi / 180.0, Vec3(tx, ty, tz));
                cfg.scene.primitives.push_back(make_box(Vec3(ex, ey, ez), pose));
            } else if (word == "cylinder") {
                double r, h, tx, ty, tz;
                need(r), need(h), need(tx), need(ty), need(tz);
                RigidMotion pose;
                pose.t = Vec3(tx, ty, tz);
                cfg.scene.primitives.push_back(make_cylinder(r, h, pose));
            } else if (word == "ground_plane") {
                cfg.scene.ground_plane = true;
            } else if (word == "texture") {
                std::string kind;
                double scale;
                if (!(ls >> kind)) throw Error(errc::parse, "scene: texture needs a kind");
                need(scale);
                if (kind == "noise")
                    cfg.scene.texture = TextureKind::Noise;
                else if (kind == "checker")
                    cfg.scene.texture = TextureKind::Checker;
                else
                    throw Error(errc::parse, "scene: unknown texture kind: " + kind);
                cfg.scene.texture_scale = scale;
            } else if (word == "ring") {
                double c, r, h, tx, ty, tz;
                need(c), need(r), need(h), need(tx), need(ty), need(tz);
                cfg.ring_count = static_cast<int>(c);
                cfg.ring_radius = r;
                cfg.ring_height = h;
                cfg.ring_target = Vec3(tx, ty, tz);
            } else if (word == "intrinsics") {
                double fu, fv, cu, cv, w, h;
                need(fu), need(fv), need(cu), need(cv), need(w), need(h);
                cfg.intrinsics = CameraIntrinsics{fu, fv, cu, cv, static_cast<int>(w), static_cast<int>(h)};
            } else if (word == "noise") {
                need(cfg.noise_sigma);
                need(cfg.outlier_fraction);
            } else if (word == "seed") {
                double s;
                need(s);
                cfg.seed = static_cast<uint64_t>(s);
                cfg.scene.texture_seed = cfg.seed;
            } else {
                throw Error(errc::parse,
                            "scene line " + std::to_string(line_no) + ": unknown directive: " + word);
            }
        } catch (const Error&) {
            throw;
        }
    }
    cfg.scene.validate();
    return cfg;
}

}  // namespace scanvol
