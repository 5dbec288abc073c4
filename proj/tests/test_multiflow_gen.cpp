#include "evtraj/event_simulator.hpp"
#include "evtraj/generator.hpp"
#include "evtraj/motion.hpp"
#include "evtraj/scene.hpp"
#include "evtraj/spline.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace evtraj;

namespace {

// Dense natural-spline oracle: unknown moments M_0..M_{K−1} with M_0 = M_{K−1} = 0.
std::vector<double> oracle_moments(const std::vector<double>& t, const std::vector<double>& y)
{
    const int k = static_cast<int>(t.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    a(0, 0) = 1;
    a(k - 1, k - 1) = 1;
    for(int i = 1; i < k - 1; ++i) {
        const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
        a(i, i - 1) = h0 / 6;
        a(i, i) = (h0 + h1) / 3;
        a(i, i + 1) = h1 / 6;
        b[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    const Eigen::VectorXd m = a.fullPivLu().solve(b);
    return {m.data(), m.data() + k};
}

double oracle_spline(const std::vector<double>& t, const std::vector<double>& y, const std::vector<double>& m, double x)
{
    std::size_t i = 0;
    while(i + 2 < t.size() && x > t[i + 1]) ++i;
    const double h = t[i + 1] - t[i];
    const double a = (t[i + 1] - x) / h, b = (x - t[i]) / h;
    return a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6;
}

Layer plain_layer(int w, int h, Vec2 anchor, MotionFn motion, std::uint64_t seed = 1)
{
    return Layer{procedural_texture(seed, w, h), anchor, std::move(motion)};
}

SceneSpec small_scene()
{
    SceneSpec s;
    s.width = 48;
    s.height = 40;
    s.background = plain_layer(72, 60, {23.5, 19.5}, static_motion());
    return s;
}

std::vector<Image> ramp_frames(double l0, double rise, int frames_n)
{
    std::vector<Image> out;
    for(int j = 0; j <= frames_n; ++j) {
        Image f(1, 1, 1);
        f.at(0, 0, 0) = static_cast<float>(std::exp(l0 + rise * j / frames_n) - 1e-3);
        out.push_back(f);
    }
    return out;
}

} // namespace

TEST_CASE("natural cubic spline")
{
    const std::vector<double> t{0.0, 0.3, 0.55, 1.0};
    const std::vector<double> y{1.0, -2.0, 0.5, 3.0};
    const NaturalCubicSpline s(t, y);
    for(std::size_t k = 0; k < t.size(); ++k) CHECK(std::abs(s(t[k]) - y[k]) <= 1e-9);
    const std::vector<double> m = oracle_moments(t, y);
    for(std::size_t k = 0; k < t.size(); ++k) CHECK(s.moments()[k] == doctest::Approx(m[k]).epsilon(1e-12));
    for(double x = 0; x <= 1.0; x += 0.01) CHECK(s(x) == doctest::Approx(oracle_spline(t, y, m, x)).epsilon(1e-12));
    CHECK(s.second_derivative(0.0) == doctest::Approx(0.0).scale(1));
    CHECK(std::abs(s.second_derivative(1.0)) < 1e-12);

    const std::vector<double> ly{0.0, 3.0, 5.5, 10.0}; // y = 10t
    const NaturalCubicSpline line(t, ly);
    CHECK(line(0.2) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(line(0.8) == doctest::Approx(8.0).epsilon(1e-12));

    CHECK_THROWS_AS(s(1.01), std::out_of_range);
    CHECK_THROWS_AS(s(-0.01), std::out_of_range);
    const std::vector<double> bad{0.0, 0.0, 1.0};
    CHECK_THROWS(NaturalCubicSpline(bad, y));
}

TEST_CASE("control point process examples")
{
    CHECK(constant_velocity_prediction(0.0, 10.0, 0.0, 0.5, 1.0) == 20.0);
    CHECK(stochastic_scale_multiplier(0.15, false) == doctest::Approx(1.0 / 1.15).epsilon(1e-15));
    CHECK(stochastic_scale_multiplier(0.15, true) == doctest::Approx(1.15).epsilon(1e-15));
    CHECK(mix_control_value(0.25, 8.0, 4.0) == 5.0);
    CHECK(mix_control_value(1.0, 20.0, -3.0) == 20.0);

    const LayerMotionParams fg = default_foreground_motion();
    const LayerMotionParams bg = default_background_motion();
    CHECK(fg.translation.theta == 120.0);
    CHECK(bg.rotation.theta == 10.0);
    CHECK(bg.alpha == 0.1);
    CHECK(fg.alpha == 0.0);

    LayerMotionParams bad = fg;
    bad.translation.beta = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = fg;
    bad.scale.theta = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("sampled control points")
{
    int threes = 0;
    for(std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        const ControlPoints cp = sample_control_points(rng, default_foreground_motion());
        REQUIRE((cp.times.size() == 3 || cp.times.size() == 4));
        threes += cp.times.size() == 3;
        CHECK(cp.times.front() == 0.0);
        CHECK(cp.times.back() == 1.0);
        for(std::size_t k = 1; k < cp.times.size(); ++k) CHECK(cp.times[k] > cp.times[k - 1]);
        for(const Similarity& s : cp.values) CHECK(s.scale > 0.0);
        CHECK(cp.values.front() == Similarity{});
    }
    CHECK(threes > 60);
    CHECK(threes < 140);

    LayerMotionParams frozen = default_background_motion();
    frozen.alpha = 1.0;
    for(std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const Similarity start{3, -2, 5, 1.2};
        const ControlPoints cp = sample_control_points(rng, frozen, start);
        for(const Similarity& s : cp.values) CHECK(s == start);
    }

    LayerMotionParams beta = default_foreground_motion();
    beta.rotation.beta = 1.0;
    Rng rng(3);
    const ControlPoints cp = sample_control_points(rng, beta);
    for(const Similarity& s : cp.values) CHECK(s.rotation == 0.0);
}

TEST_CASE("trajectory interpolates control values and is deterministic")
{
    for(std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng a(seed), b(seed);
        const SimilarityTrajectory ta = sample_trajectory(a, default_foreground_motion());
        const SimilarityTrajectory tb = sample_trajectory(b, default_foreground_motion());
        const ControlPoints& cp = ta.control_points();
        for(std::size_t k = 0; k < cp.times.size(); ++k) {
            const Similarity s = ta(cp.times[k]);
            CHECK(std::abs(s.tx - cp.values[k].tx) <= 1e-9);
            CHECK(std::abs(s.ty - cp.values[k].ty) <= 1e-9);
            CHECK(std::abs(s.rotation - cp.values[k].rotation) <= 1e-9);
            CHECK(std::abs(s.scale - cp.values[k].scale) <= 1e-9);
        }
        for(double t = 0; t <= 1.0; t += 0.05) CHECK(ta(t) == tb(t));
        CHECK(ta.min_scale() > 0.05);
    }
}

TEST_CASE("pinhole trajectory")
{
    CHECK(pinhole_trajectory(1, 2, 3, 0, 100, 5, 6, 0.0) == pinhole_trajectory(1, 2, 3, 0, 100, 5, 6, 0.9));
    CHECK(pinhole_trajectory(0, 0, 3, 1, 100, 5, 6, 0.7) == Vec2{5, 6});
    CHECK(pinhole_trajectory(1, 0, 2, 1, 100, 0, 0, 0.0) == Vec2{50, 0});
    CHECK(pinhole_trajectory(1, 0, 2, 1, 100, 0, 0, 1.0) == Vec2{100, 0});
    CHECK(pinhole_trajectory(1, 0, 2, 1, 100, 0, 0, 0.5).x == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
    CHECK(pinhole_trajectory(1, 0, 2, 1, 100, 0, 0, 0.5).y == 0.0);
    CHECK_THROWS_AS(pinhole_trajectory(1, 0, 2, 1, 100, 0, 0, 2.0), std::domain_error);
}

TEST_CASE("compose_frame examples")
{
    SceneSpec s = small_scene();
    const Frame bg_only = compose_frame(s, 0.3);
    // Identity background: texture shown with its center at the anchor.
    const Vec2 off{(72 - 1) * 0.5 - 23.5, (60 - 1) * 0.5 - 19.5};
    CHECK(bg_only.rgb.at(1, 10, 7) == s.background.texture.at(1, 10 + static_cast<int>(off.y), 7 + static_cast<int>(off.x)));
    for(std::int16_t o : bg_only.owner) CHECK(o == 0);

    SceneSpec outside = s;
    outside.sprites.push_back(Layer{procedural_sprite(4, 16, 16), {500, 500}, static_motion()});
    CHECK(compose_frame(outside, 0.3).rgb == bg_only.rgb);

    SceneSpec moving = s;
    moving.sprites.push_back(Layer{procedural_texture(9, 12, 10), {15.5, 20.5}, constant_velocity_motion(10.0, 0.0)});
    const Frame f0 = compose_frame(moving, 0.0);
    const Frame f1 = compose_frame(moving, 0.5); // 5 px
    int compared = 0;
    for(int y = 0; y < s.height; ++y)
        for(int x = 0; x + 5 < s.width; ++x) {
            const std::size_t p0 = static_cast<std::size_t>(y) * s.width + x;
            if(f0.owner[p0] != 1) continue;
            CHECK(f1.owner[p0 + 5] == 1);
            for(int c = 0; c < 3; ++c) CHECK(f1.rgb.at(c, y, x + 5) == f0.rgb.at(c, y, x));
            ++compared;
        }
    CHECK(compared == 12 * 10);
    CHECK(compose_frame(moving, 0.5, Exec::serial).rgb == f1.rgb);
}

TEST_CASE("ground truth examples")
{
    const std::vector<double> taus{0.0, 0.25, 0.5, 1.0};
    SceneSpec s = small_scene();
    s.sprites.push_back(Layer{procedural_sprite(2, 16, 16), {20, 20}, static_motion()});
    const GroundTruth still = render_gt_trajectories(s, 0.4, 0.9, taus);
    REQUIRE(still.flows.size() == 4);
    for(const FlowMap& f : still.flows)
        for(const Vec2& v : f.values) CHECK(v == Vec2{});

    SceneSpec tr = small_scene();
    tr.background.motion = constant_velocity_motion(6.0, -4.0);
    const GroundTruth shift = render_gt_trajectories(tr, 0.4, 0.9, taus);
    for(const FlowMap& f : shift.flows)
        for(const Vec2& v : f.values) {
            CHECK(v.x == doctest::Approx(3.0 * f.tau).epsilon(1e-9).scale(1));
            CHECK(v.y == doctest::Approx(-2.0 * f.tau).epsilon(1e-9).scale(1));
        }

    // Rotation φ(t) = 40t degrees about the anchor c.
    SceneSpec rot = small_scene();
    rot.background.motion = [](double t) { return Similarity{0, 0, 40.0 * t, 1.0}; };
    const GroundTruth r = render_gt_trajectories(rot, 0.4, 0.9, taus);
    const Vec2 c = rot.background.anchor;
    for(const FlowMap& f : r.flows) {
        const double phi = 40.0 * (0.5 * f.tau) * std::numbers::pi / 180.0;
        for(int y = 0; y < rot.height; y += 3)
            for(int x = 0; x < rot.width; x += 3) {
                const Vec2 d{x - c.x, y - c.y};
                const Vec2 expect{c.x + std::cos(phi) * d.x - std::sin(phi) * d.y - x,
                                  c.y + std::sin(phi) * d.x + std::cos(phi) * d.y - y};
                CHECK(std::abs(f.at(y, x).x - expect.x) <= 1e-4);
                CHECK(std::abs(f.at(y, x).y - expect.y) <= 1e-4);
            }
    }

    // Sprite pixels follow the sprite, background pixels follow the background.
    SceneSpec mixed = small_scene();
    mixed.sprites.push_back(Layer{procedural_texture(3, 10, 10), {24.5, 20.5}, constant_velocity_motion(20.0, 0.0)});
    const double t1[] = {1.0};
    const GroundTruth m = render_gt_trajectories(mixed, 0.4, 0.9, t1);
    // At t_ref = 0.4 the sprite center has moved 8 px to x = 32.5.
    CHECK(m.owner[20 * 48 + 32] == 1);
    CHECK(m.flows[0].at(20, 32).x == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(m.flows[0].at(20, 32).y == 0.0);
    CHECK(m.owner[2 * 48 + 2] == 0);
    CHECK(m.flows[0].at(2, 2) == Vec2{});

    const double bad[] = {1.5};
    CHECK_THROWS_AS(render_gt_trajectories(s, 0.4, 0.9, bad), std::out_of_range);
    CHECK_THROWS_AS(render_gt_trajectories(s, 0.9, 0.4, taus), std::invalid_argument);
}

TEST_CASE("ground truth mask marks background sources outside the texture")
{
    SceneSpec s = small_scene();
    s.background.texture = procedural_texture(1, 30, 30);
    s.background.anchor = {14.5, 14.5};
    const double taus[] = {1.0};
    const GroundTruth gt = render_gt_trajectories(s, 0.4, 0.9, taus);
    CHECK(gt.mask[5 * 48 + 5] == 1);
    CHECK(gt.mask[5 * 48 + 40] == 0);
    CHECK(gt.flows[0].mask == gt.mask);
}

TEST_CASE("simulator examples")
{
    const double times2[] = {0.0, 0.001};
    std::vector<Image> flat(2, Image(3, 2, 1, 0.5f));
    CHECK(simulate_events(flat, times2).events.empty());

    // Single pixel log step of exactly +C.
    const std::vector<Image> step = ramp_frames(std::log(0.3 + 1e-3), 0.2, 1);
    const EventStream one = simulate_events(step, times2);
    REQUIRE(one.events.size() == 1);
    CHECK(one.events[0].p == 1);
    CHECK(one.events[0].t == 1000);

    // +3.5C over 7 frames: crossings every 2 frames.
    const std::vector<Image> ramp = ramp_frames(std::log(0.1 + 1e-3), 3.5 * 0.2, 7);
    std::vector<double> times;
    for(int j = 0; j <= 7; ++j) times.push_back(j * 0.004);
    const EventStream r = simulate_events(ramp, times);
    REQUIRE(r.events.size() == 3);
    CHECK(r.events[0].t == 8000);
    CHECK(r.events[1].t == 16000);
    CHECK(r.events[2].t == 24000);

    const double uneven[] = {0.0, 0.001, 0.003};
    std::vector<Image> three(3, Image(2, 2, 1, 0.5f));
    CHECK_THROWS_AS(simulate_events(three, uneven), std::invalid_argument);
    const double dec[] = {0.0, -0.001};
    CHECK_THROWS_AS(simulate_events(flat, dec), std::invalid_argument);
    std::vector<Image> rgb(2, Image(2, 2, 3, 0.5f));
    CHECK_THROWS_AS(simulate_events(rgb, times2), std::invalid_argument);
    CHECK_THROWS_AS(simulate_events(flat, std::span<const double>(times2, 1)), std::invalid_argument);
}

TEST_CASE("reversed ramp gives negated events mirrored per crossing level")
{
    // The reference level starts at the first frame, so the bottom level fires only when
    // descending and the top level only when ascending; every other level is mirrored.
    for(int k = 1; k <= 5; ++k) {
        std::vector<Image> up = ramp_frames(std::log(0.05 + 1e-3), k * 0.2, 6);
        std::vector<double> times;
        for(int j = 0; j <= 6; ++j) times.push_back(j * 0.002);
        std::vector<Image> down(up.rbegin(), up.rend());
        const EventStream a = simulate_events(up, times);
        const EventStream b = simulate_events(down, times);
        REQUIRE(a.events.size() == static_cast<std::size_t>(k));
        REQUIRE(b.events.size() == a.events.size());
        // a.events[j − 1] crosses level j; b crosses level j at index k − 1 − j.
        for(int j = 1; j < k; ++j) {
            const Event& e = a.events[j - 1];
            const Event& m = b.events[k - 1 - j];
            CHECK(m.p == -e.p);
            CHECK(std::abs((12000 - m.t) - e.t) <= 1);
        }
        CHECK(a.events.back().t == 12000);
        CHECK(b.events.back().t == 12000);
        CHECK(b.events.back().p == -1);
    }
}

TEST_CASE("simulator is independent of the execution mode and sorted")
{
    SceneSpec s = small_scene();
    s.sprites.push_back(Layer{procedural_sprite(2, 16, 16), {20, 20}, constant_velocity_motion(30, 10)});
    std::vector<Image> frames;
    std::vector<double> times;
    for(int k = 0; k <= 20; ++k) {
        times.push_back(k * 0.004);
        frames.push_back(compose_frame(s, times.back()).gray);
    }
    const EventStream a = simulate_events(frames, times);
    const EventStream b = simulate_events(frames, times, {}, Exec::serial);
    CHECK(a.events == b.events);
    CHECK(!a.events.empty());
    CHECK_NOTHROW(validate(a));

    EventSimConfig noisy;
    noisy.threshold_sigma = 0.03;
    noisy.seed = 5;
    CHECK(simulate_events(frames, times, noisy).events == simulate_events(frames, times, noisy, Exec::serial).events);
}

TEST_CASE("generator config")
{
    GeneratorConfig c;
    CHECK_NOTHROW(c.validate());
    const std::vector<double> taus = c.gt_taus();
    REQUIRE(taus.size() == 51);
    CHECK(taus.front() == 0.0);
    CHECK(taus[10] == 0.2);
    CHECK(taus.back() == 1.0);
    CHECK(gt_file_name(0) == "flow_0000.flo32");
    CHECK(gt_file_name(500) == "flow_0500.flo32");

    const KeyValues kv = c.to_key_values();
    const GeneratorConfig back = GeneratorConfig::from_key_values(kv);
    CHECK(back.to_key_values().str() == kv.str());

    KeyValues bad = KeyValues::parse("fg.translation.beta = 2\n");
    CHECK_THROWS_AS(GeneratorConfig::from_key_values(bad), IoError);
    KeyValues unknown = KeyValues::parse("no_such_key = 1\n");
    CHECK_THROWS_AS(GeneratorConfig::from_key_values(unknown), IoError);
}

TEST_CASE("generated sequences")
{
    GeneratorConfig c;
    c.width = 64;
    c.height = 48;
    c.fps = 100;
    const Sequence a = render_sequence(c, 11);
    const Sequence b = render_sequence(c, 11, Exec::serial);
    CHECK(a.manifest.str() == b.manifest.str());
    CHECK(a.events.events == b.events.events);
    REQUIRE(a.gt.flows.size() == b.gt.flows.size());
    for(std::size_t k = 0; k < a.gt.flows.size(); ++k) CHECK(a.gt.flows[k] == b.gt.flows[k]);
    CHECK(a.frames.size() == 101);
    CHECK(a.gt.flows.size() == 51);
    for(const Vec2& v : a.gt.flows.front().values) CHECK(v == Vec2{});
    CHECK(a.scene.sprites.size() >= 1);
    CHECK(a.scene.sprites.size() <= 3);
    CHECK(!a.events.events.empty());
    CHECK_NOTHROW(validate(a.events));

    const Sequence other = render_sequence(c, 12);
    CHECK(other.manifest.str() != a.manifest.str());

    GeneratorConfig frozen = c;
    frozen.background.alpha = 1.0;
    frozen.foreground.alpha = 1.0;
    const Sequence still = render_sequence(frozen, 11);
    CHECK(still.events.events.empty());
    for(const FlowMap& f : still.gt.flows)
        for(const Vec2& v : f.values) CHECK(v == Vec2{});
}
