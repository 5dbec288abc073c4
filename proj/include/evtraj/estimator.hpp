#pragma once

#include "evtraj/bezier_flow.hpp"
#include "evtraj/common.hpp"
#include "evtraj/correlation.hpp"
#include "evtraj/event_representation.hpp"
#include "evtraj/image.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace evtraj {

struct EstimatorConfig
{
    int degree = 2;
    int iterations = 12;
    int views = 5;            // correlation voxel grids, reference included
    int view_stride = 1;      // in bins
    int bins_correlation = 5; // M
    int bins_context = 5;     // N
    int radius = 4;
    int levels_target = 4;
    int levels_intermediate = 1;
    int levels_image = 4;
    double initial_step = 4.0; // feature-grid pixels
    double step_decay = 0.7;
    double smoothness = 0.0;
    int downsample = 8;
    bool use_images = false;
    /// Parabolic peak interpolation on the level-0 taps after the pattern search.
    bool subpixel = true;
    int subpixel_rounds = 2;
    int max_moves_per_step = 32;
    std::size_t memory_budget = default_memory_budget;

    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;

    /// M = N = 5, five views, degree 2.
    static EstimatorConfig dsec_preset();
    /// 65-bin base grid split as M = 25, N = 41, six views with stride 8; degree = supervision points.
    static EstimatorConfig multiflow_preset(int supervision_points = 10);
};

struct ObjectiveReport
{
    int height = 0;
    int width = 0;
    std::vector<double> score;             // per-pixel J at the feature grid
    std::vector<double> trace;             // mean J: initial, then after every refine step
    std::vector<std::uint8_t> featureless; // 1 where every reference feature is zero
    bool no_events = false;
    std::size_t accepted_moves = 0;

    double mean_score() const;
};

/// J(x) = Σ_v c_v(x + B(τ_v, x)) / V − λ·TV(x), with c_v the bilinear level-0 center tap.
ObjectiveReport trajectory_objective(std::span<const CorrelationPyramid> pyramids,
                                     const BezierField& field,
                                     const EstimatorConfig& config);

struct RefineResult
{
    BezierField field;
    std::size_t accepted = 0;
};

/// One compass-search sweep at step δ: per pixel, repeatedly take the best strictly improving
/// ±δ axis move over all control points until none improves. Ties prefer the lower control
/// point index, then +x, −x, +y, −y. With λ > 0 pixels are swept in a red-black order.
RefineResult refine_step(const BezierField& field,
                         std::span<const CorrelationPyramid> pyramids,
                         double step,
                         const EstimatorConfig& config,
                         Exec exec = Exec::parallel);

/// Least-squares control-point correction toward the parabolic peaks of each view.
BezierField subpixel_refine(const BezierField& field,
                            std::span<const CorrelationPyramid> pyramids,
                            const EstimatorConfig& config,
                            Exec exec = Exec::parallel);

struct FieldEstimate
{
    BezierField field; // feature-grid resolution, feature-grid pixels
    ObjectiveReport report;
};

/// Zero initialization, K refine steps with δ_k = δ_0·ρ^k, then optional sub-pixel rounds.
FieldEstimate optimize_field(std::span<const CorrelationPyramid> pyramids,
                             const EstimatorConfig& config,
                             Exec exec = Exec::parallel);

struct FramePair
{
    Image reference; // grayscale at t_ref
    Image target;    // grayscale at t_target
};

/// Everything the optimizer consumes, built from events (and frames).
struct CorrelationSetup
{
    std::vector<CorrelationPyramid> pyramids;
    std::vector<std::uint8_t> featureless;
    int feature_height = 0;
    int feature_width = 0;
    std::size_t window_events = 0;
};

CorrelationSetup build_correlation_setup(const EventStream& events,
                                         std::int64_t t_ref,
                                         std::int64_t t_target,
                                         const std::optional<FramePair>& frames,
                                         const EstimatorConfig& config,
                                         Exec exec = Exec::parallel);

struct FlowEstimate
{
    BezierField field;  // full resolution, pixels
    BezierField coarse; // feature grid
    ObjectiveReport report;
};

FlowEstimate estimate_flow(const EventStream& events,
                           std::int64_t t_ref,
                           std::int64_t t_target,
                           const std::optional<FramePair>& frames,
                           const EstimatorConfig& config,
                           Exec exec = Exec::parallel);

} // namespace evtraj
