#include "evtraj/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace evtraj {

double pairwise_sum(std::span<const double> values)
{
    if(values.size() <= 8) {
        double s = 0.0;
        for(double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

PixelMask effective_mask(const FlowMap& gt, const PixelMask& mask)
{
    const std::size_t pixels = static_cast<std::size_t>(gt.width) * gt.height;
    if(!mask.empty() && mask.size() != pixels) throw std::invalid_argument("metrics: mask size mismatch");
    PixelMask out(pixels, 1);
    for(std::size_t p = 0; p < pixels; ++p) {
        if(!mask.empty() && mask[p] == 0) out[p] = 0;
        if(gt.has_mask() && gt.mask[p] == 0) out[p] = 0;
    }
    return out;
}

namespace {

void check_pair(const FlowMap& pred, const FlowMap& gt)
{
    if(pred.width != gt.width || pred.height != gt.height) throw std::invalid_argument("metrics: flow shape mismatch");
}

template<typename PixelFn>
double masked_mean(const FlowMap& pred, const FlowMap& gt, const PixelMask& mask, PixelFn fn)
{
    check_pair(pred, gt);
    const PixelMask m = effective_mask(gt, mask);
    std::vector<double> terms;
    terms.reserve(m.size());
    for(std::size_t p = 0; p < m.size(); ++p)
        if(m[p]) terms.push_back(fn(pred.values[p], gt.values[p]));
    if(terms.empty()) throw std::invalid_argument("metrics: empty mask");
    return pairwise_sum(terms) / static_cast<double>(terms.size());
}

double endpoint(const Vec2& a, const Vec2& b)
{
    return (a - b).norm();
}

double space_time_angle(const Vec2& p, const Vec2& g)
{
    const double num = p.x * g.x + p.y * g.y + 1.0;
    const double den = std::sqrt(p.x * p.x + p.y * p.y + 1.0) * std::sqrt(g.x * g.x + g.y * g.y + 1.0);
    const double c = std::clamp(num / den, -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

} // namespace

double epe(const FlowMap& pred, const FlowMap& gt, const PixelMask& mask)
{
    return masked_mean(pred, gt, mask, endpoint);
}

double angular_error(const FlowMap& pred, const FlowMap& gt, const PixelMask& mask)
{
    return masked_mean(pred, gt, mask, space_time_angle);
}

double n_pixel_error(const FlowMap& pred, const FlowMap& gt, double threshold, const PixelMask& mask)
{
    if(!(threshold > 0.0)) throw std::invalid_argument("n_pixel_error: threshold must be > 0");
    return 100.0 * masked_mean(pred, gt, mask, [threshold](const Vec2& a, const Vec2& b) {
               return endpoint(a, b) > threshold ? 1.0 : 0.0;
           });
}

TrajectoryError tepe_tae(std::span<const FlowMap> predictions, std::span<const FlowMap> gt, const PixelMask& mask)
{
    if(gt.empty()) throw std::invalid_argument("tepe_tae: need at least one ground-truth timestamp");
    if(predictions.size() != gt.size()) throw std::invalid_argument("tepe_tae: prediction/gt count mismatch");
    TrajectoryError err;
    for(std::size_t k = 0; k < gt.size(); ++k) {
        err.epe_per_tau.push_back(epe(predictions[k], gt[k], mask));
        err.ae_per_tau.push_back(angular_error(predictions[k], gt[k], mask));
    }
    err.tepe = pairwise_sum(err.epe_per_tau) / static_cast<double>(gt.size());
    err.tae = pairwise_sum(err.ae_per_tau) / static_cast<double>(gt.size());
    return err;
}

TrajectoryError tepe_tae(const BezierField& field, std::span<const FlowMap> gt, const PixelMask& mask)
{
    std::vector<FlowMap> predictions;
    predictions.reserve(gt.size());
    for(const FlowMap& g : gt) {
        if(!(g.tau > 0.0 && g.tau <= 1.0)) throw std::out_of_range("tepe_tae: tau must lie in (0, 1]");
        predictions.push_back(evaluate(field, g.tau));
    }
    return tepe_tae(predictions, gt, mask);
}

double trajectory_loss(std::span<const BezierField> iterates,
                       std::span<const FlowMap> gt,
                       double gamma,
                       const PixelMask& mask)
{
    if(iterates.empty()) throw std::invalid_argument("trajectory_loss: no iterates");
    if(gt.empty()) throw std::invalid_argument("trajectory_loss: no ground truth");
    if(!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("trajectory_loss: gamma must lie in (0, 1]");
    const std::size_t count = iterates.size();
    std::vector<double> per_iterate;
    for(std::size_t i = 0; i < count; ++i) {
        std::vector<double> per_tau;
        for(const FlowMap& g : gt) {
            const FlowMap pred = evaluate(iterates[i], g.tau);
            per_tau.push_back(masked_mean(pred, g, mask, [](const Vec2& a, const Vec2& b) {
                return std::abs(a.x - b.x) + std::abs(a.y - b.y);
            }));
        }
        const double weight = std::pow(gamma, static_cast<double>(count - 1 - i));
        per_iterate.push_back(weight * pairwise_sum(per_tau));
    }
    return pairwise_sum(per_iterate) / static_cast<double>(gt.size());
}

MetricReport evaluate_metrics(std::span<const FlowMap> predictions, std::span<const FlowMap> gt, const PixelMask& mask)
{
    const TrajectoryError traj = tepe_tae(predictions, gt, mask);
    MetricReport r;
    r.tepe = traj.tepe;
    r.tae = traj.tae;
    r.epe_per_tau = traj.epe_per_tau;
    r.ae_per_tau = traj.ae_per_tau;
    for(const FlowMap& g : gt) r.taus.push_back(g.tau);

    // Endpoint: the largest τ in the set.
    std::size_t last = 0;
    for(std::size_t k = 1; k < gt.size(); ++k)
        if(gt[k].tau > gt[last].tau) last = k;
    r.epe = traj.epe_per_tau[last];
    r.ae = traj.ae_per_tau[last];
    r.npe1 = n_pixel_error(predictions[last], gt[last], 1.0, mask);
    r.npe2 = n_pixel_error(predictions[last], gt[last], 2.0, mask);
    r.npe3 = n_pixel_error(predictions[last], gt[last], 3.0, mask);

    const PixelMask m = effective_mask(gt[last], mask);
    for(auto v : m) r.pixels += v ? 1 : 0;
    r.coverage = m.empty() ? 0.0 : static_cast<double>(r.pixels) / static_cast<double>(m.size());
    return r;
}

} // namespace evtraj
