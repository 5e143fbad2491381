#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <scanvol/error.hpp>
#include <scanvol/registration.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace scanvol;

namespace {

RigidMotion random_motion(Rng& rng) {
    Vec3 axis(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
    if (axis.norm() < 1e-12) axis = Vec3::UnitX();
    double angle = (rng.next_double() * 2.0 - 1.0) * std::numbers::pi;
    Vec3 t(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
    return RigidMotion::from_axis_angle(axis, angle, t);
}

double residual_sq(const std::vector<Vec3>& x0, const std::vector<Vec3>& x1,
                   const RigidMotion& g) {
    double s = 0.0;
    for (size_t k = 0; k < x0.size(); ++k) s += (x0[k] - g.apply(x1[k])).squaredNorm();
    return s;
}

}  // namespace

TEST_CASE("identical point sets recover the identity") {
    std::vector<Vec3> x = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0.3, 0.4, 0.5)};
    RigidMotion g = solve_rigid_procrustes(x, x);
    CHECK((g.R - Mat3::Identity()).norm() < 1e-12);
    CHECK(g.t.norm() < 1e-12);
}

TEST_CASE("construct-recover over 1000 random rigid motions") {
    Rng rng(1234);
    int failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        RigidMotion truth = random_motion(rng);
        std::vector<Vec3> x1(10), x0(10);
        for (int k = 0; k < 10; ++k) {
            x1[k] = Vec3(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
            x0[k] = truth.apply(x1[k]);
        }
        RigidMotion est = solve_rigid_procrustes(x0, x1);
        if ((est.R - truth.R).norm() > 1e-9 || (est.t - truth.t).norm() > 1e-9) ++failures;
        REQUIRE(est.is_rigid(1e-9));
    }
    CHECK(failures == 0);
}

TEST_CASE("noisy fit beats the generating truth and random competitors") {
    Rng rng(77);
    RigidMotion truth = random_motion(rng);
    std::vector<Vec3> x1(25), x0(25);
    for (size_t k = 0; k < x1.size(); ++k) {
        x1[k] = Vec3(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        Vec3 noise(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        x0[k] = truth.apply(x1[k]) + 0.01 * noise;
    }
    RigidMotion est = solve_rigid_procrustes(x0, x1);
    double at_est = residual_sq(x0, x1, est);
    CHECK(at_est <= residual_sq(x0, x1, truth) + 1e-15);
    for (int trial = 0; trial < 1000; ++trial)
        CHECK(at_est <= residual_sq(x0, x1, random_motion(rng)) + 1e-15);
}

TEST_CASE("pair order does not matter") {
    Rng rng(9);
    RigidMotion truth = random_motion(rng);
    std::vector<Vec3> x1(12), x0(12);
    for (size_t k = 0; k < x1.size(); ++k) {
        x1[k] = Vec3(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        x0[k] = truth.apply(x1[k]) + 0.005 * Vec3(rng.next_gaussian(), rng.next_gaussian(),
                                                  rng.next_gaussian());
    }
    RigidMotion a = solve_rigid_procrustes(x0, x1);

    std::vector<size_t> perm(x1.size());
    for (size_t k = 0; k < perm.size(); ++k) perm[k] = (k * 5 + 3) % perm.size();
    std::vector<Vec3> px0, px1;
    for (size_t k : perm) {
        px0.push_back(x0[k]);
        px1.push_back(x1[k]);
    }
    RigidMotion b = solve_rigid_procrustes(px0, px1);
    CHECK((a.R - b.R).norm() < 1e-12);
    CHECK((a.t - b.t).norm() < 1e-12);
}

TEST_CASE("planar configurations never produce reflections") {
    Rng rng(55);
    for (int trial = 0; trial < 500; ++trial) {
        RigidMotion truth = random_motion(rng);
        std::vector<Vec3> x1, x0;
        for (int k = 0; k < 8; ++k) {
            // points confined to a plane, some trials exactly planar
            double lift = trial % 2 == 0 ? 0.0 : 1e-8 * rng.next_gaussian();
            x1.emplace_back(rng.next_gaussian(), rng.next_gaussian(), lift);
            x0.push_back(truth.apply(x1.back()));
        }
        RigidMotion est = solve_rigid_procrustes(x0, x1);
        CHECK(est.R.determinant() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK((est.R - truth.R).norm() < 1e-6);
    }
}

TEST_CASE("degenerate inputs raise typed errors") {
    std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    CHECK_THROWS_AS(solve_rigid_procrustes(two, two), Error);
    try {
        solve_rigid_procrustes(two, two);
    } catch (const Error& e) {
        CHECK(e.code() == errc::arity);
    }

    std::vector<Vec3> line = {Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2), Vec3(3, 3, 3)};
    CHECK_THROWS_AS(solve_rigid_procrustes(line, line), Error);
    try {
        solve_rigid_procrustes(line, line);
    } catch (const Error& e) {
        CHECK(e.code() == errc::rank_deficient);
    }

    std::vector<Vec3> three = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    CHECK_THROWS_AS(solve_rigid_procrustes(three, two), Error);
}
