#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace scanvol {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Proper rigid motion x -> R*x + t with det(R) = +1.
struct RigidMotion {
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();

    static RigidMotion identity() { return {}; }

    static RigidMotion from_axis_angle(const Vec3& axis, double angle, const Vec3& translation = Vec3::Zero()) {
        return {Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), translation};
    }

    Vec3 apply(const Vec3& x) const { return R * x + t; }
    Vec3 rotate(const Vec3& v) const { return R * v; }

    // (a.compose(b))(x) == a(b(x))
    RigidMotion compose(const RigidMotion& b) const { return {R * b.R, R * b.t + t}; }
    RigidMotion inverse() const { return {R.transpose(), -(R.transpose() * t)}; }

    bool is_rigid(double tol = 1e-9) const {
        return (R.transpose() * R - Mat3::Identity()).norm() <= tol &&
               std::abs(R.determinant() - 1.0) <= tol;
    }
};

// Angle in radians of the relative rotation between a and b.
inline double rotation_angle(const Mat3& a, const Mat3& b) {
    double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
    return std::acos(std::clamp(c, -1.0, 1.0));
}

inline uint64_t hash64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) { return hash64(a ^ (hash64(b) + 0x632be59bd9b4e019ull)); }

// Deterministic generator with a platform-independent output sequence.
// std::uniform_* distributions are implementation defined, so bounded and
// Gaussian draws are implemented here directly.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, n), n >= 1; rejection sampled.
    uint64_t next_below(uint64_t n) {
        uint64_t threshold = (~n + 1) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via Box-Muller; the second value of each pair is cached.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Dot product and sum with a fixed blockwise reduction order, so the result
// is identical regardless of thread count.
double deterministic_dot(const std::vector<double>& a, const std::vector<double>& b);
double deterministic_sum(const std::vector<double>& a);

}  // namespace scanvol
