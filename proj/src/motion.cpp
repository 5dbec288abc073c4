#include "evtraj/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace evtraj {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int Rng::uniform_int(int lo, int hi)
{
    if(hi < lo) throw std::invalid_argument("Rng::uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
}

double Rng::normal()
{
    // Box–Muller; one draw per call keeps the stream position simple.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void LayerMotionParams::validate() const
{
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    for(const MotionParams* m : {&translation, &rotation, &scale})
        if(!prob(m->beta) || !prob(m->gamma) || !(m->theta >= 0.0))
            throw std::invalid_argument("motion parameters: beta, gamma in [0, 1] and theta >= 0 required");
    if(!prob(alpha)) throw std::invalid_argument("motion parameters: alpha must lie in [0, 1]");
}

LayerMotionParams default_background_motion()
{
    return {0.1, {0.0, 0.8, 30.0}, {0.7, 0.6, 10.0}, {0.4, 0.3, 0.15}};
}

LayerMotionParams default_foreground_motion()
{
    return {0.0, {0.0, 0.9, 120.0}, {0.3, 0.6, 30.0}, {0.3, 0.3, 0.30}};
}

double constant_velocity_prediction(double x_prev, double x_cur, double t_prev, double t_cur, double t_next)
{
    if(!(t_cur > t_prev)) throw std::invalid_argument("constant_velocity_prediction: control times must increase");
    return x_cur + (t_next - t_cur) / (t_cur - t_prev) * (x_cur - x_prev);
}

double stochastic_scale_multiplier(double delta0, bool delta1)
{
    return std::pow(1.0 + delta0, delta1 ? 1.0 : -1.0);
}

double mix_control_value(double gamma_hat, double deterministic, double stochastic)
{
    return gamma_hat * deterministic + (1.0 - gamma_hat) * stochastic;
}

namespace {

std::vector<double> sample_times(Rng& rng, int count)
{
    constexpr double min_gap = 0.1;
    std::vector<double> t(count);
    while(true) {
        t.front() = 0.0;
        t.back() = 1.0;
        for(int k = 1; k + 1 < count; ++k) t[k] = rng.uniform();
        std::sort(t.begin() + 1, t.end() - 1);
        bool ok = true;
        for(int k = 1; k < count; ++k) ok = ok && t[k] - t[k - 1] >= min_gap;
        if(ok) return t;
    }
}

} // namespace

ControlPoints sample_control_points(Rng& rng, const LayerMotionParams& params, const Similarity& start)
{
    params.validate();
    const int count = rng.bernoulli(0.5) ? 3 : 4;
    ControlPoints cp;
    cp.times = sample_times(rng, count);

    const bool frozen = rng.bernoulli(params.alpha);
    struct ComponentDraw
    {
        bool frozen;
        double gamma_hat;
    };
    auto draw = [&](const MotionParams& m) {
        const bool f = rng.bernoulli(m.beta);
        return ComponentDraw{f, rng.uniform(0.0, m.gamma)};
    };
    const ComponentDraw tr = draw(params.translation);
    const ComponentDraw rot = draw(params.rotation);
    const ComponentDraw sc = draw(params.scale);

    cp.values.push_back(start);
    for(int k = 0; k + 1 < count; ++k) {
        const Similarity& cur = cp.values[k];
        Similarity next = cur;
        const double* t = cp.times.data();
        auto det = [&](double prev_v, double cur_v, double stoch) {
            return k == 0 ? stoch : constant_velocity_prediction(prev_v, cur_v, t[k - 1], t[k], t[k + 1]);
        };
        const Similarity& prev = k == 0 ? cur : cp.values[k - 1];

        if(!frozen && !tr.frozen) {
            const double th = params.translation.theta;
            const double sx = cur.tx + rng.uniform(-th, th);
            const double sy = cur.ty + rng.uniform(-th, th);
            next.tx = mix_control_value(tr.gamma_hat, det(prev.tx, cur.tx, sx), sx);
            next.ty = mix_control_value(tr.gamma_hat, det(prev.ty, cur.ty, sy), sy);
        }
        if(!frozen && !rot.frozen) {
            const double th = params.rotation.theta;
            const double s = cur.rotation + rng.uniform(-th, th);
            next.rotation = mix_control_value(rot.gamma_hat, det(prev.rotation, cur.rotation, s), s);
        }
        if(!frozen && !sc.frozen) {
            const double delta0 = rng.uniform(0.0, params.scale.theta);
            const bool delta1 = rng.bernoulli(0.5);
            const double s = cur.scale * stochastic_scale_multiplier(delta0, delta1);
            next.scale = mix_control_value(sc.gamma_hat, det(prev.scale, cur.scale, s), s);
        }
        cp.values.push_back(next);
    }
    return cp;
}

SimilarityTrajectory::SimilarityTrajectory(ControlPoints points) : points_(std::move(points))
{
    const std::size_t k = points_.times.size();
    if(k < 2 || points_.values.size() != k) throw std::invalid_argument("SimilarityTrajectory: bad control points");
    std::vector<double> tx(k), ty(k), rot(k), sc(k);
    for(std::size_t i = 0; i < k; ++i) {
        tx[i] = points_.values[i].tx;
        ty[i] = points_.values[i].ty;
        rot[i] = points_.values[i].rotation;
        sc[i] = points_.values[i].scale;
    }
    tx_ = NaturalCubicSpline(points_.times, tx);
    ty_ = NaturalCubicSpline(points_.times, ty);
    rotation_ = NaturalCubicSpline(points_.times, rot);
    scale_ = NaturalCubicSpline(points_.times, sc);
}

Similarity SimilarityTrajectory::operator()(double t) const
{
    return {tx_(t), ty_(t), rotation_(t), scale_(t)};
}

double SimilarityTrajectory::min_scale(int samples) const
{
    const double t0 = points_.times.front();
    const double t1 = points_.times.back();
    double lo = std::numeric_limits<double>::infinity();
    for(int i = 0; i < samples; ++i) lo = std::min(lo, scale_(t0 + (t1 - t0) * i / (samples - 1)));
    return lo;
}

SimilarityTrajectory sample_trajectory(Rng& rng, const LayerMotionParams& params, const Similarity& start, double min_scale)
{
    for(int attempt = 0; attempt < 1000; ++attempt) {
        SimilarityTrajectory traj(sample_control_points(rng, params, start));
        if(traj.min_scale() > min_scale) return traj;
    }
    throw std::runtime_error("sample_trajectory: could not draw a trajectory with positive scale");
}

std::function<Similarity(double)> static_motion(const Similarity& s)
{
    return [s](double) { return s; };
}

std::function<Similarity(double)> constant_velocity_motion(double vx, double vy)
{
    return [vx, vy](double t) { return Similarity{vx * t, vy * t, 0.0, 1.0}; };
}

Vec2 pinhole_trajectory(double X, double Y, double D, double v, double f, double x0, double y0, double t)
{
    const double z = D - v * t;
    if(!(z > 0.0)) throw std::domain_error("pinhole_trajectory: point is not in front of the camera");
    return {f * X / z + x0, f * Y / z + y0};
}

} // namespace evtraj
