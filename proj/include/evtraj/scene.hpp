#pragma once

#include "evtraj/bezier_flow.hpp"
#include "evtraj/common.hpp"
#include "evtraj/image.hpp"
#include "evtraj/motion.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace evtraj {

using MotionFn = std::function<Similarity(double)>;

/// One textured layer. Source pixel u lands on canvas position
/// anchor + T(t) + R(θ(t))·S(t)·(u − c), with c the texture center.
struct Layer
{
    Image texture;      // RGB or RGBA; the alpha channel is ignored for the background
    Vec2 anchor;        // canvas position of the texture center under the identity transform
    MotionFn motion;    // t in seconds of the sequence

    Vec2 center() const { return {(texture.width() - 1) * 0.5, (texture.height() - 1) * 0.5}; }
    /// Canvas position of source point u at time t.
    Vec2 forward(const Vec2& u, double t) const;
    /// Source point shown at canvas position x at time t.
    Vec2 inverse(const Vec2& x, double t) const;
    bool has_alpha() const { return texture.channels() == 4; }
};

struct SceneSpec
{
    int width = 128;
    int height = 128;
    double duration = 1.0;
    double t_ref = 0.4;
    double fps = 250.0;
    std::uint64_t seed = 0;
    Layer background;
    std::vector<Layer> sprites; // back to front
};

/// Owner labels: 0 is the background, i + 1 is sprite i.
struct Frame
{
    Image rgb;
    Image gray;
    std::vector<std::int16_t> owner;
    std::vector<Vec2> source; // source coordinate of the owning layer, per pixel
};

/// Owner rule shared by rendering and ground truth: topmost sprite with warped alpha > 0.5.
Frame compose_frame(const SceneSpec& scene, double t, Exec exec = Exec::parallel);

struct GroundTruth
{
    std::vector<FlowMap> flows; // one per τ, each with the validity mask attached
    std::vector<std::int16_t> owner;
    std::vector<std::uint8_t> mask;
};

/// Displacement W_o(t)·W_o(t_ref)^-1(x) − x for the owner o of x at t_ref, t = t_ref + τ(t_target − t_ref).
/// Background pixels whose source lies outside the texture are marked invalid.
GroundTruth render_gt_trajectories(const SceneSpec& scene,
                                   double t_ref,
                                   double t_target,
                                   std::span<const double> taus,
                                   Exec exec = Exec::parallel);

/// Multi-octave value noise with random colour blobs, RGB in [0, 1].
Image procedural_texture(std::uint64_t seed, int width, int height, double feature_size = 6.0);

/// Textured star-shaped blob with an antialiased alpha channel (RGBA).
Image procedural_sprite(std::uint64_t seed, int width, int height);

} // namespace evtraj
