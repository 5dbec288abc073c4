#pragma once

#include "evtraj/common.hpp"
#include "evtraj/spline.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace evtraj {

/// Deterministic random source: mt19937_64 plus distributions defined here, so sequences are
/// identical across standard libraries.
class Rng
{
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    bool bernoulli(double p) { return uniform() < p; }
    /// Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi);
    double normal();

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer, used to derive independent per-sequence seeds.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

/// Distribution parameters of one transform component (one row of the motion table).
struct MotionParams
{
    double beta = 0.0;  // per-component freeze probability
    double gamma = 0.0; // upper bound of the constant-velocity mixing weight
    double theta = 0.0; // stochastic magnitude: px, degrees, or dimensionless for scale
};

struct LayerMotionParams
{
    double alpha = 0.0; // full-freeze probability of the whole transform
    MotionParams translation;
    MotionParams rotation;
    MotionParams scale;

    void validate() const;
};

/// Background and foreground rows of the default motion table.
LayerMotionParams default_background_motion();
LayerMotionParams default_foreground_motion();

/// 2-D similarity: translation (px), rotation (degrees), isotropic scale (> 0).
struct Similarity
{
    double tx = 0.0;
    double ty = 0.0;
    double rotation = 0.0;
    double scale = 1.0;

    friend bool operator==(const Similarity&, const Similarity&) = default;
};

/// X_k + (t_{k+1} − t_k)/(t_k − t_{k−1}) · (X_k − X_{k−1}).
double constant_velocity_prediction(double x_prev, double x_cur, double t_prev, double t_cur, double t_next);

/// (1 + δ0)^(2δ1 − 1) with δ1 ∈ {0, 1}.
double stochastic_scale_multiplier(double delta0, bool delta1);

/// Convex mixture γ̂·det + (1 − γ̂)·stoch.
double mix_control_value(double gamma_hat, double deterministic, double stochastic);

struct ControlPoints
{
    std::vector<double> times; // strictly increasing, first 0 and last 1 (seconds of the sequence)
    std::vector<Similarity> values;
};

/// Draws K ∈ {3, 4} control points with the freeze / constant-velocity / stochastic process.
/// The first step has no velocity history and is purely stochastic.
ControlPoints sample_control_points(Rng& rng, const LayerMotionParams& params, const Similarity& start = {});

/// Spline-interpolated similarity over the control times.
class SimilarityTrajectory
{
public:
    SimilarityTrajectory() = default;
    explicit SimilarityTrajectory(ControlPoints points);

    Similarity operator()(double t) const;
    const ControlPoints& control_points() const { return points_; }
    /// Smallest scale on a dense grid over the control range.
    double min_scale(int samples = 1001) const;

private:
    ControlPoints points_;
    NaturalCubicSpline tx_, ty_, rotation_, scale_;
};

/// Samples control points until the interpolated scale stays above `min_scale`.
SimilarityTrajectory sample_trajectory(Rng& rng,
                                       const LayerMotionParams& params,
                                       const Similarity& start = {},
                                       double min_scale = 0.05);

/// Constant-in-time similarity.
std::function<Similarity(double)> static_motion(const Similarity& s = {});
/// Linear translation tx = vx·t, ty = vy·t (px per second).
std::function<Similarity(double)> constant_velocity_motion(double vx, double vy);

/// Image of a 3-D point (X, Y, D − v·t) under a pinhole camera with focal length f and
/// principal point (x0, y0). Throws if the depth is not positive.
Vec2 pinhole_trajectory(double X, double Y, double D, double v, double f, double x0, double y0, double t);

} // namespace evtraj
