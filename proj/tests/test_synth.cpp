#include "otflow/synth.hpp"

#include "otflow/core.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <set>
#include <sstream>

using namespace otflow;

namespace {

SceneSpec basic_spec() {
    SceneSpec s;
    s.body_count = 2;
    s.points_per_body = 64;
    s.seed = 7;
    return s;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("zero motion and zero jitter produce identical frames") {
    SceneSpec s;
    s.body_count = 1;
    s.points_per_body = 32;
    s.shapes = {BodyShape::plane};
    s.motions = {BodyMotion{}};
    const SynthScene scene = generate(s);
    REQUIRE(scene.p.size() == 32);
    REQUIRE(scene.q.size() == 32);
    for (std::size_t i = 0; i < 32; ++i) {
        CHECK((scene.p.positions[i] - scene.q.positions[i]).norm() == 0.0);
        CHECK(scene.gt_flow.vectors[i].norm() == 0.0);
    }
}

TEST_CASE("generation is deterministic in the seed") {
    const SynthScene a = generate(basic_spec());
    const SynthScene b = generate(basic_spec());
    REQUIRE(a.p.size() == b.p.size());
    for (std::size_t i = 0; i < a.p.size(); ++i) {
        CHECK((a.p.positions[i] - b.p.positions[i]).norm() == 0.0);
        CHECK((a.q.positions[i] - b.q.positions[i]).norm() == 0.0);
        CHECK((a.gt_flow.vectors[i] - b.gt_flow.vectors[i]).norm() == 0.0);
    }
    SceneSpec other = basic_spec();
    other.seed = 8;
    const SynthScene c = generate(other);
    double moved = 0.0;
    for (std::size_t i = 0; i < a.p.size(); ++i)
        moved += (a.p.positions[i] - c.p.positions[i]).norm();
    CHECK(moved > 0.0);
}

TEST_CASE("ground truth is the exact rigid displacement") {
    SceneSpec s = basic_spec();
    s.motions = {BodyMotion{Vec3::UnitZ(), 0.2, Vec3(1.0, 0.4, -0.2)},
                 BodyMotion{Vec3::UnitX(), -0.1, Vec3(-0.5, 0.0, 0.8)}};
    const SynthScene scene = generate(s);
    for (std::size_t i = 0; i < scene.p.size(); ++i) {
        const Vec3 reached = scene.p.positions[i] + scene.gt_flow.vectors[i];
        CHECK((reached - scene.q.positions[i]).norm() < 1e-12);
    }
}

TEST_CASE("rotation pivots on the body centroid") {
    SceneSpec s;
    s.body_count = 1;
    s.points_per_body = 64;
    s.shapes = {BodyShape::sphere};
    s.motions = {BodyMotion{Vec3::UnitY(), 0.25, Vec3::Zero()}};
    s.seed = 3;
    const SynthScene scene = generate(s);
    Vec3 cp = Vec3::Zero(), cq = Vec3::Zero();
    for (std::size_t i = 0; i < scene.p.size(); ++i) {
        cp += scene.p.positions[i];
        cq += scene.q.positions[i];
    }
    // pure rotation about the centroid leaves the centroid fixed
    CHECK((cp - cq).norm() / static_cast<double>(scene.p.size()) < 1e-12);

    const Eigen::AngleAxisd rot(0.25, Vec3::UnitY());
    cp /= static_cast<double>(scene.p.size());
    for (std::size_t i = 0; i < scene.p.size(); ++i) {
        const Vec3 expect = rot * (scene.p.positions[i] - cp) + cp;
        CHECK((scene.q.positions[i] - expect).norm() < 1e-12);
    }
}

TEST_CASE("normals are analytic and rotate with the body") {
    SceneSpec s;
    s.body_count = 3;
    s.points_per_body = 48;
    s.motions = {BodyMotion{Vec3::UnitZ(), 0.3, Vec3(0.5, 0, 0)},
                 BodyMotion{Vec3(1, 1, 0).normalized(), -0.2, Vec3::Zero()},
                 BodyMotion{Vec3::UnitX(), 0.1, Vec3(0, 0.4, 0)}};
    s.seed = 11;
    const SynthScene scene = generate(s);
    REQUIRE(scene.p.has_normals());
    REQUIRE(scene.q.has_normals());
    for (std::size_t i = 0; i < scene.p.size(); ++i) {
        REQUIRE(scene.p.normal_valid[i] == 1);
        CHECK(scene.p.normals[i].norm() == doctest::Approx(1.0).epsilon(1e-12));
        const std::size_t b = scene.body_id[i];
        const Eigen::AngleAxisd rot(s.motions[b].angle, s.motions[b].axis);
        CHECK((scene.q.normals[i] - rot * scene.p.normals[i]).norm() < 1e-12);
    }
}

TEST_CASE("sphere normals point radially") {
    SceneSpec s;
    s.body_count = 1;
    s.points_per_body = 40;
    s.shapes = {BodyShape::sphere};
    s.motions = {BodyMotion{}};
    s.seed = 9;
    const SynthScene scene = generate(s);
    // a single stationary body is centered at the origin; the sample centroid
    // is only a ~1/sqrt(n) estimate of it and nowhere near 1e-9 accurate
    const Vec3 center = Vec3::Zero();
    for (std::size_t i = 0; i < scene.p.size(); ++i) {
        const Vec3 radial = (scene.p.positions[i] - center).normalized();
        CHECK(std::abs(radial.dot(scene.p.normals[i])) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("bodies respect the minimum gap") {
    SceneSpec s = basic_spec();
    s.body_count = 3;
    s.min_gap = 2.0;
    const SynthScene scene = generate(s);
    for (std::size_t i = 0; i < scene.p.size(); ++i)
        for (std::size_t j = i + 1; j < scene.p.size(); ++j)
            if (scene.body_id[i] != scene.body_id[j])
                CHECK((scene.p.positions[i] - scene.p.positions[j]).norm() >= s.min_gap);
}

TEST_CASE("dart-throwing spacing separates samples within a body") {
    SceneSpec s = basic_spec();
    s.body_count = 2;
    s.points_per_body = 64;
    s.shapes = {BodyShape::box, BodyShape::sphere};
    s.min_point_spacing = 0.25;
    const SynthScene scene = generate(s);
    for (std::size_t i = 0; i < scene.p.size(); ++i)
        for (std::size_t j = i + 1; j < scene.p.size(); ++j)
            if (scene.body_id[i] == scene.body_id[j])
                CHECK((scene.p.positions[i] - scene.p.positions[j]).norm() >=
                      s.min_point_spacing);

    // a 2x2 plane patch cannot hold 512 samples half a meter apart
    s.shapes = {BodyShape::plane};
    s.points_per_body = 512;
    s.min_point_spacing = 0.5;
    CHECK_THROWS_AS(generate(s), std::runtime_error);

    s.min_point_spacing = -0.1;
    CHECK_THROWS_AS(generate(s), std::invalid_argument);
}

TEST_CASE("colors are quantized to 8 bits") {
    for (ColorMode mode : {ColorMode::per_body, ColorMode::gradient}) {
        SceneSpec s = basic_spec();
        s.color_mode = mode;
        const SynthScene scene = generate(s);
        REQUIRE(scene.p.has_colors());
        for (const auto& c : scene.p.colors)
            for (int k = 0; k < 3; ++k) {
                const double scaled = c[k] * 255.0;
                CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
            }
    }
}

TEST_CASE("gradient colors vary inside a body, uniform colors do not") {
    SceneSpec s = basic_spec();
    s.color_mode = ColorMode::per_body;
    const SynthScene uniform = generate(s);
    std::set<std::array<double, 3>> per_body;
    for (std::size_t i = 0; i < uniform.p.size(); ++i)
        if (uniform.body_id[i] == 0)
            per_body.insert({uniform.p.colors[i][0], uniform.p.colors[i][1],
                             uniform.p.colors[i][2]});
    CHECK(per_body.size() == 1);

    s.color_mode = ColorMode::gradient;
    const SynthScene grad = generate(s);
    std::set<std::array<double, 3>> shades;
    for (std::size_t i = 0; i < grad.p.size(); ++i)
        if (grad.body_id[i] == 0)
            shades.insert({grad.p.colors[i][0], grad.p.colors[i][1], grad.p.colors[i][2]});
    CHECK(shades.size() > 8);
}

TEST_CASE("jitter only perturbs frame two") {
    SceneSpec s = basic_spec();
    const SynthScene clean = generate(s);
    s.jitter_sigma = 0.05;
    const SynthScene noisy = generate(s);
    double q_moved = 0.0;
    for (std::size_t i = 0; i < clean.p.size(); ++i) {
        CHECK((clean.p.positions[i] - noisy.p.positions[i]).norm() == 0.0);
        q_moved += (clean.q.positions[i] - noisy.q.positions[i]).norm();
    }
    CHECK(q_moved > 0.0);
}

TEST_CASE("rigid ground truth ignores jitter, observed ground truth absorbs it") {
    SceneSpec s = basic_spec();
    s.jitter_sigma = 0.05;
    const SynthScene rigid = generate(s);
    double exact_hits = 0;
    for (std::size_t i = 0; i < rigid.p.size(); ++i)
        if ((rigid.p.positions[i] + rigid.gt_flow.vectors[i] - rigid.q.positions[i]).norm() < 1e-12)
            ++exact_hits;
    CHECK(exact_hits < 3);  // jittered targets should not match the rigid truth

    s.gt_mode = GroundTruthMode::observed;
    const SynthScene observed = generate(s);
    for (std::size_t i = 0; i < observed.p.size(); ++i)
        CHECK((observed.p.positions[i] + observed.gt_flow.vectors[i] -
               observed.q.positions[i]).norm() < 1e-12);
}

TEST_CASE("outliers append clutter to frame two only") {
    SceneSpec s = basic_spec();
    s.outlier_fraction = 0.25;
    const SynthScene scene = generate(s);
    const std::size_t core = 2 * 64;
    CHECK(scene.p.size() == core);
    CHECK(scene.q.size() == core + 32);
    CHECK(scene.gt_flow.size() == core);
    // clutter still satisfies the cloud invariants (colors, unit normals)
    CHECK(validate_cloud(scene.q).ok());
}

TEST_CASE("motion bounds and degenerate specs are rejected") {
    SceneSpec s = basic_spec();
    s.body_count = 0;
    CHECK_THROWS_AS(generate(s), std::invalid_argument);

    s = basic_spec();
    s.motions = {BodyMotion{Vec3::UnitZ(), 0.5, Vec3::Zero()}, BodyMotion{}};
    CHECK_THROWS_AS(generate(s), std::invalid_argument);

    s = basic_spec();
    s.motions = {BodyMotion{Vec3::UnitZ(), 0.0, Vec3(4, 0, 0)}, BodyMotion{}};
    CHECK_THROWS_AS(generate(s), std::invalid_argument);

    s = basic_spec();
    s.outlier_fraction = 1.0;
    CHECK_THROWS_AS(generate(s), std::invalid_argument);

    s = basic_spec();
    s.body_count = 1;
    s.points_per_body = 1;
    CHECK_THROWS_AS(generate(s), std::invalid_argument);  // total points < 2
}

TEST_CASE("generated clouds pass validation") {
    SceneSpec s = basic_spec();
    s.body_count = 3;
    s.jitter_sigma = 0.02;
    s.outlier_fraction = 0.1;
    const SynthScene scene = generate(s);
    CHECK(validate_cloud(scene.p).ok());
    CHECK(validate_cloud(scene.q).ok());
}

TEST_CASE("label corruption flips a seeded subset") {
    PseudoLabelSet labels;
    labels.labels.assign(200, Vec3(1, 0, 0));
    labels.valid.assign(200, 1);
    labels.valid[0] = 0;
    const PseudoLabelSet out = corrupt_labels(labels, 0.5, 0.2, 13);
    CHECK(out.size() == 200);
    CHECK((out.labels[0] - labels.labels[0]).norm() == 0.0);  // invalid entries untouched
    std::size_t changed = 0;
    for (std::size_t i = 0; i < 200; ++i) {
        const double d = (out.labels[i] - labels.labels[i]).lpNorm<Eigen::Infinity>();
        CHECK(d <= 0.2);
        if (d > 0.0) ++changed;
    }
    CHECK(changed > 50);
    CHECK(changed < 150);

    const PseudoLabelSet again = corrupt_labels(labels, 0.5, 0.2, 13);
    for (std::size_t i = 0; i < 200; ++i)
        CHECK((again.labels[i] - out.labels[i]).norm() == 0.0);

    CHECK_THROWS_AS(corrupt_labels(labels, -0.1, 0.2, 1), std::invalid_argument);
    CHECK_THROWS_AS(corrupt_labels(labels, 0.5, -1.0, 1), std::invalid_argument);
}

TEST_CASE("scene specs parse from key=value text") {
    std::istringstream in(
        "# two-body test scene\n"
        "bodies = 2\n"
        "points_per_body = 96\n"
        "shapes = plane,sphere\n"
        "color = per_body\n"
        "gt = observed\n"
        "jitter = 0.03\n"
        "outliers = 0.1\n"
        "min_gap = 4.5\n"
        "spacing = 0.15\n"
        "scale = 0.8\n"
        "max_rotation = 0.2\n"
        "max_translation = 1.5\n"
        "seed = 42\n");
    const SceneSpec s = parse_scene_spec(in);
    CHECK(s.body_count == 2);
    CHECK(s.points_per_body == 96);
    REQUIRE(s.shapes.size() == 2);
    CHECK(s.shapes[0] == BodyShape::plane);
    CHECK(s.shapes[1] == BodyShape::sphere);
    CHECK(s.color_mode == ColorMode::per_body);
    CHECK(s.gt_mode == GroundTruthMode::observed);
    CHECK(s.jitter_sigma == 0.03);
    CHECK(s.outlier_fraction == 0.1);
    CHECK(s.min_gap == 4.5);
    CHECK(s.min_point_spacing == 0.15);
    CHECK(s.body_scale == 0.8);
    CHECK(s.max_rotation == 0.2);
    CHECK(s.max_translation == 1.5);
    CHECK(s.seed == 42);

    std::istringstream unknown("frobnicate = 3\n");
    CHECK_THROWS_AS(parse_scene_spec(unknown), std::runtime_error);
    std::istringstream bad_value("bodies = lots\n");
    CHECK_THROWS_AS(parse_scene_spec(bad_value), std::runtime_error);
}

}  // TEST_SUITE
