#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "flowtrack/flo_io.hpp"
#include "flowtrack/flow.hpp"
#include "flowtrack/synth.hpp"
#include "helpers.hpp"

using namespace flowtrack;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("flow");

namespace {
FlowField random_field(testutil::Rand& rand, int w, int h, double magnitude) {
    FlowField f(w, h);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        f.u[i] = rand.uniform(-magnitude, magnitude);
        f.v[i] = rand.uniform(-magnitude, magnitude);
    }
    return f;
}

FlowField smooth_field(int w, int h, double amplitude, double phase) {
    FlowField f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            f.u_at(x, y) = amplitude * std::sin(2.0 * std::numbers::pi * x / w + phase);
            f.v_at(x, y) = amplitude * std::cos(2.0 * std::numbers::pi * y / h + phase);
        }
    return f;
}

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "flowtrack_flow_tests";
    fs::create_directories(dir);
    return dir;
}
}  // namespace

TEST_CASE("sample_flow on constant and stored values") {
    const FlowField constant = FlowField::constant(20, 15, 5.0, -3.0);
    for (double x : {0.0, 3.7, 11.25, 19.0}) {
        for (double y : {0.0, 4.5, 14.0}) {
            const FlowVector d = sample_flow(constant, x, y);
            CHECK(d.dx == 5.0);
            CHECK(d.dy == -3.0);
        }
    }

    testutil::Rand rand(3);
    const FlowField field = random_field(rand, 12, 9, 4.0);
    for (int rep = 0; rep < 40; ++rep) {
        const int x = rand.uniform_int(0, 11);
        const int y = rand.uniform_int(0, 8);
        const FlowVector d = sample_flow(field, x, y);
        CHECK(d.dx == field.u_at(x, y));
        CHECK(d.dy == field.v_at(x, y));
    }
}

TEST_CASE("sample_flow interpolates the midpoint linearly") {
    FlowField f(4, 1);
    f.u_at(1, 0) = 2.0;
    f.u_at(2, 0) = 4.0;
    CHECK(sample_flow(f, 1.5, 0.0).dx == doctest::Approx(3.0));
    CHECK(sample_flow(f, 1.25, 0.0).dx == doctest::Approx(2.5));
}

TEST_CASE("sample_flow clamps out-of-bounds lookups to the border") {
    testutil::Rand rand(5);
    const FlowField field = random_field(rand, 8, 6, 2.0);
    CHECK(sample_flow(field, -3.0, -9.0).dx == field.u_at(0, 0));
    CHECK(sample_flow(field, 100.0, 100.0).dy == field.v_at(7, 5));
}

TEST_CASE("sample_flow is continuous within the discrete Lipschitz bound") {
    testutil::Rand rand(7);
    const FlowField field = random_field(rand, 16, 16, 3.0);
    double lipschitz = 0.0;
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x + 1 < 16; ++x)
            lipschitz = std::max(lipschitz,
                                 std::abs(field.u_at(x + 1, y) - field.u_at(x, y)));
    for (int y = 0; y + 1 < 16; ++y)
        for (int x = 0; x < 16; ++x)
            lipschitz = std::max(lipschitz,
                                 std::abs(field.u_at(x, y + 1) - field.u_at(x, y)));
    for (int rep = 0; rep < 200; ++rep) {
        const double x = rand.uniform(0.5, 14.5);
        const double y = rand.uniform(0.5, 14.5);
        const double eps = rand.uniform(0.0, 0.4);
        const double dx = sample_flow(field, x + eps, y).dx - sample_flow(field, x, y).dx;
        CHECK(std::abs(dx) <= 2.0 * lipschitz * eps + 1e-12);
    }
}

TEST_CASE("propagate_pose identity under zero flow") {
    const FlowField zero(32, 32);
    testutil::Rand rand(9);
    const Pose pose = testutil::random_pose(rand, posetrack15_schema(), 2.0, 29.0);
    const Pose moved = propagate_pose(pose, zero);
    for (std::size_t i = 0; i < pose.joints.size(); ++i) {
        CHECK(moved.joints[i].x == pose.joints[i].x);
        CHECK(moved.joints[i].y == pose.joints[i].y);
        CHECK(moved.joints[i].confidence == pose.joints[i].confidence);
        CHECK(moved.joints[i].visible == pose.joints[i].visible);
    }
}

TEST_CASE("propagate_pose applies the displacement") {
    const FlowField constant = FlowField::constant(64, 64, 5.0, -3.0);
    Pose pose;
    pose.joints.push_back({10.0, 10.0, 0.8, true});
    const Pose moved = propagate_pose(pose, constant);
    CHECK(moved.joints[0].x == doctest::Approx(15.0));
    CHECK(moved.joints[0].y == doctest::Approx(7.0));
    CHECK(moved.joints[0].confidence == 0.8);
}

TEST_CASE("propagate_pose marks joints leaving the frame invisible") {
    const FlowField push = FlowField::constant(32, 32, 10.0, 0.0);
    Pose pose;
    pose.joints.push_back({28.0, 5.0, 1.0, true});
    pose.joints.push_back({4.0, 5.0, 1.0, true});
    const Pose moved = propagate_pose(pose, push);
    CHECK(moved.joints[0].x == doctest::Approx(38.0));  // unclamped coordinates
    CHECK_FALSE(moved.joints[0].visible);
    CHECK(moved.joints[1].visible);
}

TEST_CASE("propagate_pose reproduces the simulated next frame") {
    const Scenario scn = testutil::separated_actors_scenario(8);
    const GeneratedScene scene = generate(scn);
    for (std::size_t t = 0; t + 1 < scene.gt.frames.size(); ++t) {
        for (const GTInstance& inst : scene.gt.frames[t]) {
            const Pose moved = propagate_pose(inst.pose, scene.flows[t]);
            const GTInstance* next = nullptr;
            for (const GTInstance& cand : scene.gt.frames[t + 1])
                if (cand.track_id == inst.track_id) next = &cand;
            REQUIRE(next != nullptr);
            for (std::size_t j = 0; j < moved.joints.size(); ++j) {
                CHECK(std::abs(moved.joints[j].x - next->pose.joints[j].x) < 1e-6);
                CHECK(std::abs(moved.joints[j].y - next->pose.joints[j].y) < 1e-6);
            }
        }
    }
}

TEST_CASE("compose_flow basics") {
    const FlowField zero(16, 16);
    const FlowField composed_zero = compose_flow(zero, zero);
    for (double v : composed_zero.u) CHECK(v == 0.0);

    const FlowField ab = FlowField::constant(16, 16, 2.0, 0.0);
    const FlowField bc = FlowField::constant(16, 16, 3.0, 1.0);
    const FlowField ac = compose_flow(ab, bc);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            CHECK(ac.u_at(x, y) == 5.0);
            CHECK(ac.v_at(x, y) == 1.0);
        }

    CHECK_THROWS_AS(compose_flow(ab, FlowField(8, 16)), ShapeMismatch);
}

TEST_CASE("compose_flow matches sequential propagation at sample points") {
    const FlowField f1 = smooth_field(32, 32, 0.8, 0.3);
    const FlowField f2 = smooth_field(32, 32, 0.6, 1.1);
    const FlowField composed = compose_flow(f1, f2);
    testutil::Rand rand(11);
    for (int rep = 0; rep < 100; ++rep) {
        const int x = rand.uniform_int(0, 31);
        const int y = rand.uniform_int(0, 31);
        const FlowVector one = sample_flow(f1, x, y);
        const FlowVector two = sample_flow(f2, x + one.dx, y + one.dy);
        const FlowVector direct = sample_flow(composed, x, y);
        CHECK(std::abs(direct.dx - (one.dx + two.dx)) < 1e-9);
        CHECK(std::abs(direct.dy - (one.dy + two.dy)) < 1e-9);
    }
}

TEST_CASE("compose_flow is associative on constant fields") {
    const FlowField a = FlowField::constant(12, 12, 1.5, -0.5);
    const FlowField b = FlowField::constant(12, 12, -0.75, 2.0);
    const FlowField c = FlowField::constant(12, 12, 0.25, 0.25);
    const FlowField left = compose_flow(compose_flow(a, b), c);
    const FlowField right = compose_flow(a, compose_flow(b, c));
    for (std::size_t i = 0; i < left.u.size(); ++i) {
        CHECK(left.u[i] == right.u[i]);
        CHECK(left.v[i] == right.v[i]);
    }
}

TEST_CASE("compose_flow associativity on affine sub-pixel fields") {
    // Bilinear interpolation reproduces affine fields exactly, so both
    // association orders agree away from the clamped border.
    auto affine = [](double base, double gx, double gy) {
        FlowField f(32, 32);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                f.u_at(x, y) = base + gx * x / 32.0 + gy * y / 32.0;
                f.v_at(x, y) = base - gy * x / 32.0 + gx * y / 32.0;
            }
        return f;
    };
    const FlowField a = affine(0.12, 0.3, -0.2);
    const FlowField b = affine(-0.07, -0.25, 0.15);
    const FlowField c = affine(0.05, 0.2, 0.3);
    const FlowField left = compose_flow(compose_flow(a, b), c);
    const FlowField right = compose_flow(a, compose_flow(b, c));
    double worst = 0.0;
    for (int y = 2; y < 30; ++y)
        for (int x = 2; x < 30; ++x) {
            worst = std::max(worst, std::abs(left.u_at(x, y) - right.u_at(x, y)));
            worst = std::max(worst, std::abs(left.v_at(x, y) - right.v_at(x, y)));
        }
    CHECK(worst < 1e-6);
}

TEST_CASE("flow_box_gen basics") {
    const FlowField zero(64, 64);
    CHECK(flow_box_gen({}, zero).empty());

    Instance inst;
    inst.pose.joints = {{10.0, 10.0, 1.0, true}, {30.0, 50.0, 1.0, true}};
    inst.score = 0.9;
    const std::vector<BBox> boxes = flow_box_gen({inst}, zero, 0.15);
    REQUIRE(boxes.size() == 1);
    const BBox expected = expand_box(bbox_from_pose(inst.pose, true), 0.15);
    CHECK(boxes[0].x_min == doctest::Approx(expected.x_min));
    CHECK(boxes[0].y_max == doctest::Approx(expected.y_max));
    CHECK(boxes[0].score == doctest::Approx(0.9));
    CHECK(boxes[0].source == BoxSource::flow);

    // decay factor scales the inherited score
    CHECK(flow_box_gen({inst}, zero, 0.15, 0.5)[0].score == doctest::Approx(0.45));

    // instances without any visible propagated joint produce no box
    Instance hidden = inst;
    for (Joint& j : hidden.pose.joints) j.visible = false;
    CHECK(flow_box_gen({hidden}, zero).empty());
}

TEST_CASE("flow boxes recover a missed fast-moving person") {
    const Scenario scn = testutil::fast_miss_scenario(17);
    const GeneratedScene scene = generate(scn);
    // Pretend the detector missed actor 0 at frame 5: propagate its frame-4
    // instance and check the flow box still contains the frame-5 joints.
    Instance tracked;
    tracked.pose = scene.gt.frames[4][0].pose;
    tracked.id = 0;
    tracked.score = 1.0;
    const std::vector<BBox> boxes = flow_box_gen({tracked}, scene.flows[4], 0.15);
    REQUIRE(boxes.size() == 1);
    const Pose& next = scene.gt.frames[5][0].pose;
    int contained = 0;
    for (const Joint& j : next.joints)
        if (j.x >= boxes[0].x_min && j.x <= boxes[0].x_max && j.y >= boxes[0].y_min &&
            j.y <= boxes[0].y_max)
            ++contained;
    CHECK(contained >= static_cast<int>(0.8 * next.joints.size()));
}

TEST_CASE("flo files round-trip bit-exactly") {
    testutil::Rand rand(13);
    FlowField field(33, 17);
    for (std::size_t i = 0; i < field.u.size(); ++i) {
        field.u[i] = static_cast<float>(rand.uniform(-40, 40));
        field.v[i] = static_cast<float>(rand.uniform(-40, 40));
    }
    const fs::path dir = temp_dir();
    const fs::path first = dir / "roundtrip_a.flo";
    const fs::path second = dir / "roundtrip_b.flo";
    write_flo(first, field);
    const FlowField loaded = read_flo(first);
    REQUIRE(loaded.width == field.width);
    REQUIRE(loaded.height == field.height);
    for (std::size_t i = 0; i < field.u.size(); ++i) {
        CHECK(loaded.u[i] == field.u[i]);
        CHECK(loaded.v[i] == field.v[i]);
    }
    write_flo(second, loaded);
    std::ifstream a(first, std::ios::binary), b(second, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)),
                              std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(b)),
                              std::istreambuf_iterator<char>());
    CHECK(bytes_a == bytes_b);
    CHECK(bytes_a.size() == 12 + 33 * 17 * 8);
}

TEST_CASE("flo reader rejects malformed files") {
    const fs::path dir = temp_dir();
    const fs::path bad_magic = dir / "bad_magic.flo";
    {
        std::ofstream out(bad_magic, std::ios::binary);
        const float wrong = 1.0f;
        const std::int32_t dims[2] = {4, 4};
        out.write(reinterpret_cast<const char*>(&wrong), 4);
        out.write(reinterpret_cast<const char*>(dims), 8);
    }
    CHECK_THROWS_AS(read_flo(bad_magic), ParseError);

    const fs::path truncated = dir / "truncated.flo";
    write_flo(truncated, FlowField(6, 6));
    fs::resize_file(truncated, 40);
    CHECK_THROWS_AS(read_flo(truncated), ParseError);

    const fs::path oversized = dir / "trailing.flo";
    write_flo(oversized, FlowField(3, 3));
    {
        std::ofstream out(oversized, std::ios::binary | std::ios::app);
        out.put('x');
    }
    CHECK_THROWS_AS(read_flo(oversized), ParseError);
    CHECK_THROWS_AS(read_flo(dir / "does_not_exist.flo"), ParseError);
}

TEST_SUITE_END();
