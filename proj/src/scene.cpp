#include "evtraj/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace evtraj {

namespace {

constexpr double deg = std::numbers::pi / 180.0;

Similarity motion_at(const Layer& layer, double t)
{
    return layer.motion ? layer.motion(t) : Similarity{};
}

} // namespace

namespace {

Vec2 apply_forward(const Layer& l, const Similarity& s, const Vec2& u)
{
    const Vec2 d = u - l.center();
    const double c = std::cos(s.rotation * deg);
    const double sn = std::sin(s.rotation * deg);
    return {l.anchor.x + s.tx + s.scale * (c * d.x - sn * d.y), l.anchor.y + s.ty + s.scale * (sn * d.x + c * d.y)};
}

Vec2 apply_inverse(const Layer& l, const Similarity& s, const Vec2& x)
{
    if(!(s.scale > 0.0)) throw std::domain_error("layer transform has non-positive scale");
    const Vec2 d{x.x - l.anchor.x - s.tx, x.y - l.anchor.y - s.ty};
    const double c = std::cos(s.rotation * deg);
    const double sn = std::sin(s.rotation * deg);
    const Vec2 c0 = l.center();
    return {c0.x + (c * d.x + sn * d.y) / s.scale, c0.y + (-sn * d.x + c * d.y) / s.scale};
}

} // namespace

Vec2 Layer::forward(const Vec2& u, double t) const
{
    return apply_forward(*this, motion_at(*this, t), u);
}

Vec2 Layer::inverse(const Vec2& x, double t) const
{
    return apply_inverse(*this, motion_at(*this, t), x);
}

Frame compose_frame(const SceneSpec& scene, double t, Exec exec)
{
    const int W = scene.width;
    const int H = scene.height;
    if(W <= 0 || H <= 0) throw std::invalid_argument("compose_frame: empty canvas");
    if(scene.background.texture.empty()) throw std::invalid_argument("compose_frame: scene has no background");
    const Image& bg = scene.background.texture;
    if(bg.channels() < 3) throw std::invalid_argument("compose_frame: background must be RGB");

    Frame f;
    f.rgb = Image(W, H, 3);
    f.owner.assign(static_cast<std::size_t>(W) * H, 0);
    f.source.assign(static_cast<std::size_t>(W) * H, Vec2{});

    // Transforms are evaluated once; the per-pixel loop only applies them.
    std::vector<const Layer*> layers{&scene.background};
    for(const Layer& s : scene.sprites) layers.push_back(&s);
    std::vector<Similarity> sims;
    for(const Layer* l : layers) sims.push_back(motion_at(*l, t));

    auto row = [&](int y) {
        for(int x = 0; x < W; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * W + x;
            const Vec2 pos{static_cast<double>(x), static_cast<double>(y)};
            const Vec2 ub = apply_inverse(*layers[0], sims[0], pos);
            double rgb[3];
            for(int c = 0; c < 3; ++c) rgb[c] = bg.sample_clamped(c, ub.x, ub.y);
            f.source[p] = ub;
            for(std::size_t i = 1; i < layers.size(); ++i) {
                const Layer& l = *layers[i];
                const Vec2 u = apply_inverse(l, sims[i], pos);
                const bool inside = u.x >= -0.5 && u.y >= -0.5 && u.x < l.texture.width() - 0.5 &&
                                    u.y < l.texture.height() - 0.5;
                const double a = l.has_alpha() ? l.texture.sample_zero(3, u.x, u.y) : inside ? 1.0 : 0.0;
                if(a <= 0.0) continue;
                for(int c = 0; c < 3; ++c) rgb[c] = a * l.texture.sample_clamped(c, u.x, u.y) + (1.0 - a) * rgb[c];
                if(a > 0.5) {
                    f.owner[p] = static_cast<std::int16_t>(i);
                    f.source[p] = u;
                }
            }
            for(int c = 0; c < 3; ++c) f.rgb.at(c, y, x) = static_cast<float>(rgb[c]);
        }
    };
    if(exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for(int y = 0; y < H; ++y) row(y);
    } else {
        for(int y = 0; y < H; ++y) row(y);
    }
    f.gray = to_grayscale(f.rgb);
    return f;
}

GroundTruth render_gt_trajectories(const SceneSpec& scene,
                                   double t_ref,
                                   double t_target,
                                   std::span<const double> taus,
                                   Exec exec)
{
    if(!(t_target > t_ref)) throw std::invalid_argument("render_gt_trajectories: t_target must exceed t_ref");
    const Frame ref = compose_frame(scene, t_ref, exec);
    const int W = scene.width;
    const int H = scene.height;
    const std::size_t pixels = static_cast<std::size_t>(W) * H;

    GroundTruth gt;
    gt.owner = ref.owner;
    gt.mask.assign(pixels, 1);
    const Image& bg = scene.background.texture;
    for(std::size_t p = 0; p < pixels; ++p) {
        if(ref.owner[p] != 0) continue;
        const Vec2 u = ref.source[p];
        if(u.x < 0.0 || u.y < 0.0 || u.x > bg.width() - 1 || u.y > bg.height() - 1) gt.mask[p] = 0;
    }

    std::vector<Similarity> ref_sims{motion_at(scene.background, t_ref)};
    for(const Layer& l : scene.sprites) ref_sims.push_back(motion_at(l, t_ref));

    for(double tau : taus) {
        if(!(tau >= 0.0 && tau <= 1.0)) throw std::out_of_range("render_gt_trajectories: tau outside [0, 1]");
        FlowMap flow(W, H, tau);
        flow.mask = gt.mask;
        if(tau == 0.0) {
            gt.flows.push_back(std::move(flow));
            continue;
        }
        const double t = t_ref + tau * (t_target - t_ref);
        std::vector<Similarity> sims{motion_at(scene.background, t)};
        for(const Layer& l : scene.sprites) sims.push_back(motion_at(l, t));
        auto row = [&](int y) {
            for(int x = 0; x < W; ++x) {
                const std::size_t p = static_cast<std::size_t>(y) * W + x;
                const int o = ref.owner[p];
                const Layer& l = o == 0 ? scene.background : scene.sprites[o - 1];
                // Relative to the forward image at t_ref rather than x, so frozen layers give exact zeros.
                const Vec2 moved = apply_forward(l, sims[o], ref.source[p]);
                flow.values[p] = moved - apply_forward(l, ref_sims[o], ref.source[p]);
            }
        };
        if(exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
            for(int y = 0; y < H; ++y) row(y);
        } else {
            for(int y = 0; y < H; ++y) row(y);
        }
        gt.flows.push_back(std::move(flow));
    }
    return gt;
}

namespace {

double smoothstep(double e0, double e1, double x)
{
    const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Lattice of random values, interpolated with a smoothstep; wraps so large canvases tile cleanly.
struct ValueNoise
{
    int nx, ny;
    std::vector<double> v;

    ValueNoise(Rng& rng, int nx_, int ny_) : nx(nx_), ny(ny_), v(static_cast<std::size_t>(nx_) * ny_)
    {
        for(double& x : v) x = rng.uniform();
    }
    double operator()(double x, double y) const
    {
        const int x0 = static_cast<int>(std::floor(x));
        const int y0 = static_cast<int>(std::floor(y));
        const double fx = smoothstep(0.0, 1.0, x - x0);
        const double fy = smoothstep(0.0, 1.0, y - y0);
        auto g = [&](int a, int b) {
            a = ((a % nx) + nx) % nx;
            b = ((b % ny) + ny) % ny;
            return v[static_cast<std::size_t>(b) * nx + a];
        };
        const double top = (1 - fx) * g(x0, y0) + fx * g(x0 + 1, y0);
        const double bot = (1 - fx) * g(x0, y0 + 1) + fx * g(x0 + 1, y0 + 1);
        return (1 - fy) * top + fy * bot;
    }
};

} // namespace

Image procedural_texture(std::uint64_t seed, int width, int height, double feature_size)
{
    if(width <= 0 || height <= 0 || !(feature_size > 0.0))
        throw std::invalid_argument("procedural_texture: bad size");
    Rng rng(seed);
    Image img(width, height, 3);

    const double base[3] = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
    const int octaves = 3;
    std::vector<ValueNoise> noise;
    std::vector<double> cell;
    for(int o = 0; o < octaves; ++o) {
        const double s = feature_size * std::pow(2.0, 1 - o);
        cell.push_back(s);
        const int nx = std::max(2, static_cast<int>(std::ceil(width / s)) + 1);
        const int ny = std::max(2, static_cast<int>(std::ceil(height / s)) + 1);
        for(int c = 0; c < 3; ++c) noise.emplace_back(rng, nx, ny);
    }
    for(int y = 0; y < height; ++y)
        for(int x = 0; x < width; ++x)
            for(int c = 0; c < 3; ++c) {
                double v = 0.0;
                double amp = 0.5;
                for(int o = 0; o < octaves; ++o) {
                    v += amp * (noise[o * 3 + c](x / cell[o], y / cell[o]) - 0.5);
                    amp *= 0.6;
                }
                img.at(c, y, x) = static_cast<float>(base[c] + 1.2 * v);
            }

    // Hard-edged discs give corners and strong gradients.
    const int discs = std::max(4, width * height / 400);
    for(int d = 0; d < discs; ++d) {
        const double cx = rng.uniform(0, width);
        const double cy = rng.uniform(0, height);
        const double r = rng.uniform(1.5, 2.5 * feature_size);
        const double col[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
        const int x0 = std::max(0, static_cast<int>(cx - r - 1));
        const int x1 = std::min(width - 1, static_cast<int>(cx + r + 1));
        const int y0 = std::max(0, static_cast<int>(cy - r - 1));
        const int y1 = std::min(height - 1, static_cast<int>(cy + r + 1));
        for(int y = y0; y <= y1; ++y)
            for(int x = x0; x <= x1; ++x) {
                const double a = 1.0 - smoothstep(r - 0.5, r + 0.5, std::hypot(x - cx, y - cy));
                for(int c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<float>(a * col[c] + (1 - a) * img.at(c, y, x));
            }
    }
    for(float& v : img.data()) v = std::clamp(v, 0.02f, 0.98f);
    return img;
}

Image procedural_sprite(std::uint64_t seed, int width, int height)
{
    Rng rng(seed);
    const Image tex = procedural_texture(split_seed(seed, 1), width, height, 4.0);
    Image img(width, height, 4);
    for(int c = 0; c < 3; ++c)
        std::copy(tex.plane(c).begin(), tex.plane(c).end(), img.plane(c).begin());

    const double cx = (width - 1) * 0.5;
    const double cy = (height - 1) * 0.5;
    const double radius = 0.5 * std::min(width, height) - 1.5;
    double amp[4], phase[4];
    for(int k = 0; k < 4; ++k) {
        amp[k] = rng.uniform(0.0, 0.12);
        phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    for(int y = 0; y < height; ++y)
        for(int x = 0; x < width; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const double phi = std::atan2(dy, dx);
            double r = 0.75;
            for(int k = 0; k < 4; ++k) r += amp[k] * std::cos((k + 2) * phi + phase[k]);
            r = std::min(1.0, r) * radius;
            img.at(3, y, x) = static_cast<float>(1.0 - smoothstep(r - 0.5, r + 0.5, std::hypot(dx, dy)));
        }
    return img;
}

} // namespace evtraj
