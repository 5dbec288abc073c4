#pragma once

#include "evtraj/event_simulator.hpp"
#include "evtraj/metrics.hpp"
#include "evtraj/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace evtraj::test {

/// Rendered frames and simulated events of a scene over [0, duration].
struct Clip
{
    SceneSpec scene;
    std::vector<double> times;
    std::vector<Image> frames;
    EventStream events;
};

inline Clip render_clip(SceneSpec scene, const EventSimConfig& sim = {})
{
    Clip clip;
    const int count = static_cast<int>(std::lround(scene.duration * scene.fps)) + 1;
    for(int k = 0; k < count; ++k) clip.times.push_back(std::min(scene.duration, k / scene.fps));
    for(double t : clip.times) clip.frames.push_back(compose_frame(scene, t).gray);
    clip.events = simulate_events(clip.frames, clip.times, sim);
    clip.scene = std::move(scene);
    return clip;
}

inline MotionFn constant_velocity(Vec2 v)
{
    return [v](double t) { return Similarity{v.x * t, v.y * t, 0.0, 1.0}; };
}

/// Procedural background moving at `background` px/s, optionally one sprite at `sprite` px/s
/// starting centered.
inline SceneSpec translating_scene(std::uint64_t seed,
                                   int width,
                                   int height,
                                   Vec2 background,
                                   std::optional<Vec2> sprite = std::nullopt,
                                   double duration = 0.5)
{
    SceneSpec s;
    s.width = width;
    s.height = height;
    s.duration = duration;
    s.t_ref = 0.0;
    s.seed = seed;
    const Vec2 center{(width - 1) * 0.5, (height - 1) * 0.5};
    const int bw = width + 2 * static_cast<int>(std::ceil(std::abs(background.x) * duration)) + 16;
    const int bh = height + 2 * static_cast<int>(std::ceil(std::abs(background.y) * duration)) + 16;
    s.background = Layer{procedural_texture(seed, bw, bh), center, constant_velocity(background)};
    if(sprite) {
        const int side = std::min(width, height) / 2;
        s.sprites.push_back(Layer{procedural_sprite(seed + 1, side, side), center, constant_velocity(*sprite)});
    }
    return s;
}

/// Random dots sliding at v px/s; every dot fires one event per microsecond step at its rounded
/// position, so the event pattern translates exactly.
inline EventStream sliding_dots(std::uint64_t seed, int w, int h, int dots, Vec2 v, std::int64_t t_end, std::int64_t dt)
{
    Rng rng(seed);
    struct Dot
    {
        Vec2 p;
        std::int8_t polarity;
    };
    std::vector<Dot> d;
    const double margin = std::hypot(v.x, v.y) * t_end * 1e-6 + 2;
    for(int i = 0; i < dots; ++i)
        d.push_back({{rng.uniform(-margin, w + margin), rng.uniform(-margin, h + margin)},
                     static_cast<std::int8_t>(rng.bernoulli(0.5) ? 1 : -1)});
    EventStream s{w, h, {}};
    for(std::int64_t t = 0; t <= t_end; t += dt)
        for(const Dot& dot : d) {
            const long x = std::lround(dot.p.x + v.x * t * 1e-6);
            const long y = std::lround(dot.p.y + v.y * t * 1e-6);
            if(x < 0 || y < 0 || x >= w || y >= h) continue;
            s.events.push_back(Event{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), t, dot.polarity});
        }
    return s;
}

/// Events plus ground-truth flows on a τ grid over [t_ref, t_target].
struct TrajectoryCase
{
    Clip clip;
    double t_ref = 0.0;
    double t_target = 0.0;
    std::vector<FlowMap> gt;
    PixelMask sprite; // owner at t_ref is sprite 1 and the ground truth is valid

    std::int64_t t_ref_us() const { return std::llround(t_ref * 1e6); }
    std::int64_t t_target_us() const { return std::llround(t_target * 1e6); }
};

inline TrajectoryCase make_case(SceneSpec scene, double t_ref, double t_target, const std::vector<double>& taus)
{
    TrajectoryCase c;
    c.t_ref = t_ref;
    c.t_target = t_target;
    const GroundTruth gt = render_gt_trajectories(scene, t_ref, t_target, taus);
    c.gt = gt.flows;
    c.sprite.assign(gt.owner.size(), 0);
    for(std::size_t i = 0; i < gt.owner.size(); ++i) c.sprite[i] = gt.owner[i] == 1 && gt.mask[i];
    c.clip = render_clip(std::move(scene));
    return c;
}

/// Static background, one sprite translating at `v` px/s; window [0.2, 0.3] s.
inline TrajectoryCase translation_case(std::uint64_t seed, Vec2 v, int size = 128)
{
    return make_case(translating_scene(seed, size, size, {0.0, 0.0}, v), 0.2, 0.3, {1.0});
}

/// Flat sprite at depth Z(t) = D − v·t facing a pinhole camera whose principal point is the
/// canvas centre; its image scales by Z(t_ref) / Z(t) about that point. Window [0.4, 0.6] s.
struct ApproachScene
{
    double depth = 1.2; // D
    double speed = 1.0; // v
    double t_ref = 0.4;
    double t_target = 0.6;
};

inline TrajectoryCase approach_case(std::uint64_t seed, const ApproachScene& a = {}, int size = 128)
{
    SceneSpec s = translating_scene(seed, size, size, {0.0, 0.0}, Vec2{0.0, 0.0}, 0.8);
    const double z_ref = a.depth - a.speed * a.t_ref;
    s.sprites[0].motion = [a, z_ref](double t) { return Similarity{0.0, 0.0, 0.0, z_ref / (a.depth - a.speed * t)}; };
    return make_case(std::move(s), a.t_ref, a.t_target, {0.25, 0.5, 0.75, 1.0});
}

} // namespace evtraj::test
