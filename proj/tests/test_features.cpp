#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <scanvol/features.hpp>
#include <scanvol/math.hpp>
#include <scanvol/synth.hpp>

#include <cmath>
#include <vector>

using namespace scanvol;

namespace {

Feature synthetic_feature(int id, float fill) {
    Feature f;
    f.keypoint.u = id;
    f.keypoint.v = id;
    f.descriptor.fill(0.0f);
    f.descriptor[size_t(id) % kDescriptorSize] = 1.0f;
    f.descriptor[(size_t(id) + 7) % kDescriptorSize] = fill;
    float norm = std::sqrt(1.0f + fill * fill);
    for (auto& d : f.descriptor) d /= norm;
    return f;
}

GrayImage textured_view() {
    Scene scene;
    scene.ground_plane = true;
    scene.texture = TextureKind::Noise;
    scene.texture_scale = 0.05;
    scene.texture_seed = 1;
    scene.primitives.push_back(make_box(Vec3(0.1, 0.1, 0.1), RigidMotion{Mat3::Identity(), Vec3(0, 0, 0.05)}));
    CameraIntrinsics K;
    K.fu = K.fv = 525.0;
    K.cu = 319.5;
    K.cv = 239.5;
    K.width = 640;
    K.height = 480;
    RigidMotion cam = look_at(Vec3(0.6, 0, 0.8), Vec3(0, 0, 0.05));
    return render_depth(scene, cam, K).gray;
}

}  // namespace

TEST_CASE("uniform images have no features") {
    GrayImage flat(128, 96, 0.5f);
    CHECK(detect_and_describe(flat).empty());
}

TEST_CASE("textured renders yield a healthy keypoint count") {
    GrayImage img = textured_view();
    auto feats = detect_and_describe(img);
    CHECK(feats.size() >= 50);
    for (const auto& f : feats) {
        CHECK(f.keypoint.u >= 0.0);
        CHECK(f.keypoint.u < img.width);
        CHECK(f.keypoint.v >= 0.0);
        CHECK(f.keypoint.v < img.height);
        CHECK(f.keypoint.scale > 0.0);
        float norm2 = 0.0f;
        for (float d : f.descriptor) norm2 += d * d;
        CHECK(std::abs(std::sqrt(norm2) - 1.0f) < 1e-3f);
    }
}

TEST_CASE("detection is deterministic") {
    GrayImage img = textured_view();
    auto a = detect_and_describe(img);
    auto b = detect_and_describe(img);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].keypoint.u == b[i].keypoint.u);
        CHECK(a[i].keypoint.v == b[i].keypoint.v);
        CHECK(a[i].keypoint.scale == b[i].keypoint.scale);
        CHECK(a[i].keypoint.orientation == b[i].keypoint.orientation);
        CHECK(a[i].descriptor == b[i].descriptor);
    }
}

TEST_CASE("matching a list against itself is the identity") {
    std::vector<Feature> a;
    for (int i = 0; i < 20; ++i) a.push_back(synthetic_feature(i * 3, 0.2f + 0.01f * i));
    auto m = match_forward_backward(a, a, 10.0);
    REQUIRE(m.size() == a.size());
    for (const auto& pair : m) CHECK(pair[0] == pair[1]);
}

TEST_CASE("matching recovers a planted permutation") {
    std::vector<Feature> a;
    for (int i = 0; i < 15; ++i) a.push_back(synthetic_feature(i * 5, 0.3f));
    std::vector<Feature> b;
    std::vector<int> perm(a.size());
    for (size_t i = 0; i < a.size(); ++i) perm[i] = int((i * 7 + 2) % a.size());
    for (size_t i = 0; i < a.size(); ++i) b.push_back(a[size_t(perm[i])]);

    auto m = match_forward_backward(a, b, 10.0);
    REQUIRE(m.size() == a.size());
    for (const auto& pair : m) CHECK(perm[size_t(pair[1])] == pair[0]);
}

TEST_CASE("max_distance filters weak matches and indices stay unique") {
    // two nearby pairs plus one far apart
    std::vector<Feature> a = {synthetic_feature(0, 0.1f), synthetic_feature(40, 0.1f)};
    std::vector<Feature> b = {synthetic_feature(0, 0.11f), synthetic_feature(80, 0.1f)};
    auto tight = match_forward_backward(a, b, 0.05);
    CHECK(tight.size() == 1);  // only the 0-0 pair is close
    CHECK(tight[0][0] == 0);
    CHECK(tight[0][1] == 0);

    auto loose = match_forward_backward(a, b, 10.0);
    std::vector<bool> seen_a(a.size(), false), seen_b(b.size(), false);
    for (const auto& pair : loose) {
        CHECK_FALSE(seen_a[size_t(pair[0])]);
        CHECK_FALSE(seen_b[size_t(pair[1])]);
        seen_a[size_t(pair[0])] = true;
        seen_b[size_t(pair[1])] = true;
    }
}

TEST_CASE("mutual requirement drops one-sided attractions") {
    // b0 is closest to both a0 and a1, but b0's own nearest is a0 only
    Feature a0 = synthetic_feature(0, 0.10f);
    Feature a1 = synthetic_feature(0, 0.18f);
    Feature b0 = synthetic_feature(0, 0.12f);
    auto m = match_forward_backward({a0, a1}, {b0}, 10.0);
    REQUIRE(m.size() == 1);
    CHECK(m[0][0] == 0);
    CHECK(m[0][1] == 0);
}

TEST_CASE("empty inputs match to nothing") {
    std::vector<Feature> a = {synthetic_feature(3, 0.5f)};
    CHECK(match_forward_backward(a, {}, 1.0).empty());
    CHECK(match_forward_backward({}, a, 1.0).empty());
    CHECK(match_forward_backward({}, {}, 1.0).empty());
}
