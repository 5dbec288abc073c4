#pragma once

#include "evtraj/common.hpp"

#include <optional>
#include <span>
#include <vector>

namespace evtraj {

/// Dense displacement map at normalized time `tau`, with an optional validity mask.
struct FlowMap
{
    int width = 0;
    int height = 0;
    double tau = 1.0;
    std::vector<Vec2> values;
    std::vector<std::uint8_t> mask; // empty, or width*height entries of 0/1

    FlowMap() = default;
    FlowMap(int width, int height, double tau = 1.0);

    Vec2& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    const Vec2& at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
    bool has_mask() const { return !mask.empty(); }
    bool valid(int y, int x) const { return mask.empty() || mask[static_cast<std::size_t>(y) * width + x] != 0; }

    friend bool operator==(const FlowMap&, const FlowMap&) = default;
};

/// Bernstein basis C(n,i)(1−τ)^(n−i) τ^i for i = 0..n. Throws for τ outside [0, 1].
std::vector<double> bernstein_weights(int degree, double tau);

/// Per-pixel Bézier trajectories with control points P_1..P_n; P_0 ≡ 0 is implicit.
/// Displacements are in pixels of the field's own grid.
class BezierField
{
public:
    BezierField() = default;
    BezierField(int degree, int height, int width);

    int degree() const { return degree_; }
    int height() const { return height_; }
    int width() const { return width_; }

    /// Control point i in 1..degree.
    Vec2& point(int i, int y, int x) { return points_[index(i, y, x)]; }
    const Vec2& point(int i, int y, int x) const { return points_[index(i, y, x)]; }

    std::span<const Vec2> points() const { return points_; }
    std::span<Vec2> points() { return points_; }

    /// Displacement of one pixel at τ, given precomputed Bernstein weights.
    Vec2 displacement(std::span<const double> weights, int y, int x) const;

    bool same_shape(const BezierField& o) const
    {
        return degree_ == o.degree_ && height_ == o.height_ && width_ == o.width_;
    }

    friend bool operator==(const BezierField&, const BezierField&) = default;

private:
    std::size_t index(int i, int y, int x) const
    {
        return (static_cast<std::size_t>(i - 1) * height_ + y) * width_ + x;
    }

    int degree_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<Vec2> points_;
};

FlowMap evaluate(const BezierField& field, double tau);

/// P_i += ΔP_i; `deltas` must have the field's degree and resolution.
BezierField apply_update(const BezierField& field, const BezierField& deltas);

/// Control-pointwise a·F + b·G.
BezierField linear_combination(double a, const BezierField& f, double b, const BezierField& g);

/// Per output pixel a 3×3 stack of weights over the coarse neighborhood of its cell.
/// Layout [coarse_y][coarse_x][sub_y][sub_x][k], k = (dy + 1) * 3 + (dx + 1).
struct ConvexWeights
{
    int coarse_height = 0;
    int coarse_width = 0;
    int factor = 1;
    std::vector<double> values;

    double& at(int cy, int cx, int sy, int sx, int k)
    {
        return values[((((static_cast<std::size_t>(cy) * coarse_width + cx) * factor + sy) * factor + sx) * 9) + k];
    }
    double at(int cy, int cx, int sy, int sx, int k) const
    {
        return values[((((static_cast<std::size_t>(cy) * coarse_width + cx) * factor + sy) * factor + sx) * 9) + k];
    }
};

/// Bilinear weights expressed as a convex 3×3 combination (the default upsampling mask).
ConvexWeights bilinear_convex_weights(int coarse_height, int coarse_width, int factor);

/// Upsample by `factor`: each fine control point is a convex combination of the 3×3 coarse
/// neighborhood (edge-replicated at the border), then scaled by `factor` into fine pixels.
BezierField upsample_convex(const BezierField& field,
                            int factor,
                            const std::optional<ConvexWeights>& weights = std::nullopt);

/// Per-pixel least squares on the Bernstein basis with P_0 fixed at 0.
/// Each sample carries its τ in FlowMap::tau.
BezierField fit_bezier_to_samples(std::span<const FlowMap> samples, int degree);

} // namespace evtraj
