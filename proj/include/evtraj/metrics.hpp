#pragma once

#include "evtraj/bezier_flow.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace evtraj {

/// Boolean pixel selection; an empty mask selects every pixel.
using PixelMask = std::vector<std::uint8_t>;

/// Pairwise (tree) summation; the result does not depend on thread count.
double pairwise_sum(std::span<const double> values);

/// Mean ‖pred − gt‖₂ over the mask.
double epe(const FlowMap& pred, const FlowMap& gt, const PixelMask& mask = {});

/// Mean space-time angle between (u, v, 1) vectors, in degrees.
double angular_error(const FlowMap& pred, const FlowMap& gt, const PixelMask& mask = {});

/// Percentage of masked pixels with endpoint error strictly above `threshold` pixels.
double n_pixel_error(const FlowMap& pred, const FlowMap& gt, double threshold, const PixelMask& mask = {});

struct TrajectoryError
{
    double tepe = 0.0;
    double tae = 0.0;
    std::vector<double> epe_per_tau;
    std::vector<double> ae_per_tau;
};

/// Averages of per-τ EPE and AE over the ground-truth timestamps (taken from gt[k].tau).
TrajectoryError tepe_tae(const BezierField& field, std::span<const FlowMap> gt, const PixelMask& mask = {});
TrajectoryError tepe_tae(std::span<const FlowMap> predictions, std::span<const FlowMap> gt, const PixelMask& mask = {});

/// (1/N_k) Σ_i γ^(N_I − i) Σ_k mean_mask ‖f_gt(τ_k) − B_i(τ_k)‖₁ over iterates i = 1..N_I.
double trajectory_loss(std::span<const BezierField> iterates,
                       std::span<const FlowMap> gt,
                       double gamma = 0.8,
                       const PixelMask& mask = {});

struct MetricReport
{
    double epe = 0.0;
    double ae = 0.0;
    double npe1 = 0.0;
    double npe2 = 0.0;
    double npe3 = 0.0;
    double tepe = 0.0;
    double tae = 0.0;
    std::vector<double> taus;
    std::vector<double> epe_per_tau;
    std::vector<double> ae_per_tau;
    std::size_t pixels = 0;
    double coverage = 0.0;
};

/// Two-view metrics at the last τ plus trajectory metrics over all τ.
MetricReport evaluate_metrics(std::span<const FlowMap> predictions,
                              std::span<const FlowMap> gt,
                              const PixelMask& mask = {});

/// Combines an explicit mask with the ground truth's own validity mask.
PixelMask effective_mask(const FlowMap& gt, const PixelMask& mask);

} // namespace evtraj
