#include "evtraj/bezier_flow.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace evtraj {

FlowMap::FlowMap(int width_, int height_, double tau_)
    : width(width_), height(height_), tau(tau_), values(static_cast<std::size_t>(width_) * height_)
{
}

std::vector<double> bernstein_weights(int degree, double tau)
{
    if(degree < 0) throw std::invalid_argument("bernstein_weights: negative degree");
    if(!(tau >= 0.0 && tau <= 1.0)) throw std::out_of_range("bernstein_weights: tau outside [0, 1]");
    std::vector<double> w(degree + 1);
    double binom = 1.0;
    for(int i = 0; i <= degree; ++i) {
        w[i] = binom * std::pow(1.0 - tau, degree - i) * std::pow(tau, i);
        binom = binom * (degree - i) / (i + 1);
    }
    return w;
}

BezierField::BezierField(int degree, int height, int width)
    : degree_(degree), height_(height), width_(width)
{
    if(degree < 1) throw std::invalid_argument("BezierField: degree must be at least 1");
    if(height < 0 || width < 0) throw std::invalid_argument("BezierField: negative resolution");
    points_.assign(static_cast<std::size_t>(degree) * height * width, Vec2{});
}

Vec2 BezierField::displacement(std::span<const double> weights, int y, int x) const
{
    Vec2 d;
    for(int i = 1; i <= degree_; ++i) d += weights[i] * point(i, y, x);
    return d;
}

FlowMap evaluate(const BezierField& field, double tau)
{
    const std::vector<double> w = bernstein_weights(field.degree(), tau);
    FlowMap flow(field.width(), field.height(), tau);
#pragma omp parallel for schedule(static)
    for(int y = 0; y < field.height(); ++y)
        for(int x = 0; x < field.width(); ++x) flow.at(y, x) = field.displacement(w, y, x);
    return flow;
}

BezierField apply_update(const BezierField& field, const BezierField& deltas)
{
    if(!field.same_shape(deltas)) throw std::invalid_argument("apply_update: delta shape mismatch");
    BezierField out = field;
    auto dst = out.points();
    auto src = deltas.points();
    for(std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    return out;
}

BezierField linear_combination(double a, const BezierField& f, double b, const BezierField& g)
{
    if(!f.same_shape(g)) throw std::invalid_argument("linear_combination: shape mismatch");
    BezierField out(f.degree(), f.height(), f.width());
    auto dst = out.points();
    auto pf = f.points();
    auto pg = g.points();
    for(std::size_t k = 0; k < dst.size(); ++k) dst[k] = a * pf[k] + b * pg[k];
    return out;
}

ConvexWeights bilinear_convex_weights(int coarse_height, int coarse_width, int factor)
{
    if(factor < 1) throw std::invalid_argument("bilinear_convex_weights: factor must be >= 1");
    ConvexWeights cw{coarse_height, coarse_width, factor, {}};
    cw.values.assign(static_cast<std::size_t>(coarse_height) * coarse_width * factor * factor * 9, 0.0);

    // 1-D weights over offsets {-1, 0, +1} for each sub-pixel position.
    std::vector<std::array<double, 3>> axis(factor);
    for(int s = 0; s < factor; ++s) {
        const double u = (s + 0.5) / factor - 0.5;
        if(u >= 0.0)
            axis[s] = {0.0, 1.0 - u, u};
        else
            axis[s] = {-u, 1.0 + u, 0.0};
    }
    for(int cy = 0; cy < coarse_height; ++cy)
        for(int cx = 0; cx < coarse_width; ++cx)
            for(int sy = 0; sy < factor; ++sy)
                for(int sx = 0; sx < factor; ++sx)
                    for(int dy = 0; dy < 3; ++dy)
                        for(int dx = 0; dx < 3; ++dx)
                            cw.at(cy, cx, sy, sx, dy * 3 + dx) = axis[sy][dy] * axis[sx][dx];
    return cw;
}

namespace {

void check_convex(const ConvexWeights& w, int height, int width, int factor)
{
    if(w.coarse_height != height || w.coarse_width != width || w.factor != factor ||
       w.values.size() != static_cast<std::size_t>(height) * width * factor * factor * 9)
        throw std::invalid_argument("upsample_convex: weight stack shape mismatch");
    for(std::size_t base = 0; base < w.values.size(); base += 9) {
        double sum = 0.0;
        for(int k = 0; k < 9; ++k) {
            const double v = w.values[base + k];
            if(v < 0.0) throw std::invalid_argument("upsample_convex: negative convex weight");
            sum += v;
        }
        if(std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("upsample_convex: weights do not sum to 1");
    }
}

} // namespace

BezierField upsample_convex(const BezierField& field, int factor, const std::optional<ConvexWeights>& weights)
{
    if(factor < 1) throw std::invalid_argument("upsample_convex: factor must be >= 1");
    const int ch = field.height();
    const int cw = field.width();
    if(weights) check_convex(*weights, ch, cw, factor);
    const ConvexWeights mask = weights ? *weights : bilinear_convex_weights(ch, cw, factor);

    BezierField out(field.degree(), ch * factor, cw * factor);
    const double scale = static_cast<double>(factor);
#pragma omp parallel for schedule(static)
    for(int cy = 0; cy < ch; ++cy) {
        for(int cx = 0; cx < cw; ++cx) {
            for(int sy = 0; sy < factor; ++sy) {
                for(int sx = 0; sx < factor; ++sx) {
                    for(int i = 1; i <= field.degree(); ++i) {
                        Vec2 acc;
                        for(int dy = -1; dy <= 1; ++dy) {
                            const int yy = std::clamp(cy + dy, 0, ch - 1);
                            for(int dx = -1; dx <= 1; ++dx) {
                                const double wk = mask.at(cy, cx, sy, sx, (dy + 1) * 3 + (dx + 1));
                                if(wk == 0.0) continue;
                                const int xx = std::clamp(cx + dx, 0, cw - 1);
                                acc += wk * field.point(i, yy, xx);
                            }
                        }
                        out.point(i, cy * factor + sy, cx * factor + sx) = scale * acc;
                    }
                }
            }
        }
    }
    return out;
}

BezierField fit_bezier_to_samples(std::span<const FlowMap> samples, int degree)
{
    if(degree < 1) throw std::invalid_argument("fit_bezier_to_samples: degree must be at least 1");
    if(samples.empty()) throw std::invalid_argument("fit_bezier_to_samples: no samples");
    const int height = samples.front().height;
    const int width = samples.front().width;
    std::vector<double> taus;
    for(const FlowMap& s : samples) {
        if(s.height != height || s.width != width)
            throw std::invalid_argument("fit_bezier_to_samples: sample shape mismatch");
        if(!(s.tau > 0.0 && s.tau <= 1.0))
            throw std::out_of_range("fit_bezier_to_samples: sample tau must lie in (0, 1]");
        taus.push_back(s.tau);
    }
    std::sort(taus.begin(), taus.end());
    const auto distinct = std::unique(taus.begin(), taus.end()) - taus.begin();
    if(distinct < degree)
        throw std::invalid_argument("fit_bezier_to_samples: rank-deficient basis, need at least degree distinct tau");

    const int k = static_cast<int>(samples.size());
    Eigen::MatrixXd basis(k, degree);
    for(int r = 0; r < k; ++r) {
        const std::vector<double> w = bernstein_weights(degree, samples[r].tau);
        for(int i = 1; i <= degree; ++i) basis(r, i - 1) = w[i];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
    if(qr.rank() < degree) throw std::invalid_argument("fit_bezier_to_samples: rank-deficient basis");

    const std::size_t pixels = static_cast<std::size_t>(height) * width;
    Eigen::MatrixXd rhs(k, 2 * pixels);
    for(int r = 0; r < k; ++r) {
        const auto& v = samples[r].values;
        for(std::size_t p = 0; p < pixels; ++p) {
            rhs(r, 2 * p) = v[p].x;
            rhs(r, 2 * p + 1) = v[p].y;
        }
    }
    const Eigen::MatrixXd solution = qr.solve(rhs);

    BezierField field(degree, height, width);
    for(int i = 1; i <= degree; ++i) {
        for(std::size_t p = 0; p < pixels; ++p) {
            const int y = static_cast<int>(p / width);
            const int x = static_cast<int>(p % width);
            field.point(i, y, x) = {solution(i - 1, 2 * p), solution(i - 1, 2 * p + 1)};
        }
    }
    return field;
}

} // namespace evtraj
