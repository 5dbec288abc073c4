#include "evtraj/estimator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evtraj {

void EstimatorConfig::validate() const
{
    auto require = [](bool ok, const char* what) {
        if(!ok) throw std::invalid_argument(std::string("estimator config: ") + what);
    };
    require(degree >= 1, "degree must be >= 1");
    require(iterations >= 1, "iterations must be >= 1");
    require(views >= 2, "need at least two correlation views");
    require(view_stride >= 1, "view_stride must be >= 1");
    require(bins_correlation >= 2 && bins_context >= 2, "bin counts must be >= 2");
    require((views - 1) * view_stride <= bins_context - 1, "views overrun the context window");
    require(radius >= 0, "radius must be >= 0");
    require(levels_target >= 1 && levels_intermediate >= 1 && levels_image >= 1, "levels must be >= 1");
    require(initial_step > 0.0, "initial_step must be > 0");
    require(step_decay > 0.0 && step_decay < 1.0, "step_decay must lie in (0, 1)");
    require(smoothness >= 0.0, "smoothness must be >= 0");
    require(downsample >= 1, "downsample must be >= 1");
    require(subpixel_rounds >= 0, "subpixel_rounds must be >= 0");
    require(max_moves_per_step >= 1, "max_moves_per_step must be >= 1");
}

EstimatorConfig EstimatorConfig::dsec_preset()
{
    return EstimatorConfig{};
}

EstimatorConfig EstimatorConfig::multiflow_preset(int supervision_points)
{
    EstimatorConfig c;
    c.degree = supervision_points;
    c.bins_correlation = 25;
    c.bins_context = 41;
    c.views = 6;
    c.view_stride = 8;
    c.use_images = true;
    return c;
}

double ObjectiveReport::mean_score() const
{
    if(score.empty()) return 0.0;
    return std::accumulate(score.begin(), score.end(), 0.0) / static_cast<double>(score.size());
}

namespace {

constexpr std::array<Vec2, 4> kMoves = {Vec2{1, 0}, Vec2{-1, 0}, Vec2{0, 1}, Vec2{0, -1}};

/// Shared evaluation machinery for one field shape and one set of views.
class Objective
{
public:
    Objective(std::span<const CorrelationPyramid> pyramids, int degree, double smoothness)
        : pyramids_(pyramids), degree_(degree), smoothness_(smoothness)
    {
        if(pyramids.empty()) throw std::invalid_argument("objective: no correlation pyramids");
        for(const CorrelationPyramid& p : pyramids) {
            if(p.levels.empty()) throw std::invalid_argument("objective: view without a pyramid");
            weights_.push_back(bernstein_weights(degree, p.tau));
        }
        height_ = pyramids.front().levels.front().height;
        width_ = pyramids.front().levels.front().width;
        inv_views_ = 1.0 / static_cast<double>(pyramids.size());
    }

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t views() const { return pyramids_.size(); }
    const std::vector<double>& weights(std::size_t v) const { return weights_[v]; }
    const CorrelationVolume& level0(std::size_t v) const { return pyramids_[v].levels.front(); }

    Vec2 displacement(std::span<const Vec2> points, std::size_t v) const
    {
        Vec2 d;
        for(int i = 1; i <= degree_; ++i) d += weights_[v][i] * points[i - 1];
        return d;
    }

    double correlation(int y, int x, std::span<const Vec2> points) const
    {
        double sum = 0.0;
        for(std::size_t v = 0; v < pyramids_.size(); ++v) {
            const Vec2 d = displacement(points, v);
            sum += sample_volume(pyramids_[v].levels.front(), y, x, x + d.x, y + d.y);
        }
        return sum * inv_views_;
    }

    /// Σ over 4-neighbors and control points of the L1 control-point difference.
    double variation(const BezierField& field, int y, int x, std::span<const Vec2> points) const
    {
        double tv = 0.0;
        auto add = [&](int yy, int xx) {
            if(yy < 0 || xx < 0 || yy >= field.height() || xx >= field.width()) return;
            for(int i = 1; i <= degree_; ++i) {
                const Vec2& q = field.point(i, yy, xx);
                tv += std::abs(points[i - 1].x - q.x) + std::abs(points[i - 1].y - q.y);
            }
        };
        add(y - 1, x);
        add(y + 1, x);
        add(y, x - 1);
        add(y, x + 1);
        return tv;
    }

    double smoothness() const { return smoothness_; }
    int degree() const { return degree_; }

private:
    std::span<const CorrelationPyramid> pyramids_;
    std::vector<std::vector<double>> weights_;
    int degree_;
    double smoothness_;
    int height_ = 0;
    int width_ = 0;
    double inv_views_ = 1.0;
};

void check_field(const Objective& obj, const BezierField& field)
{
    if(field.height() != obj.height() || field.width() != obj.width())
        throw std::invalid_argument("estimator: field is not at feature resolution");
}

std::vector<Vec2> gather(const BezierField& field, int y, int x)
{
    std::vector<Vec2> p(field.degree());
    for(int i = 1; i <= field.degree(); ++i) p[i - 1] = field.point(i, y, x);
    return p;
}

/// Compass search on one pixel; returns the number of accepted moves.
std::size_t poll_pixel(const Objective& obj,
                       BezierField& field,
                       int y,
                       int x,
                       double step,
                       int max_moves)
{
    std::vector<Vec2> cur = gather(field, y, x);
    const double lambda2 = 2.0 * obj.smoothness();
    auto gain = [&](std::span<const Vec2> p) {
        double g = obj.correlation(y, x, p);
        if(lambda2 > 0.0) g -= lambda2 * obj.variation(field, y, x, p);
        return g;
    };

    double current = gain(cur);
    std::size_t accepted = 0;
    std::vector<Vec2> trial = cur;
    for(int move = 0; move < max_moves; ++move) {
        double best = current;
        int best_point = -1;
        int best_dir = -1;
        for(int i = 0; i < obj.degree(); ++i) {
            for(int d = 0; d < 4; ++d) {
                trial[i] = cur[i] + step * kMoves[d];
                const double g = gain(trial);
                trial[i] = cur[i];
                if(g > best) {
                    best = g;
                    best_point = i;
                    best_dir = d;
                }
            }
        }
        if(best_point < 0) break;
        cur[best_point] += step * kMoves[best_dir];
        trial[best_point] = cur[best_point];
        current = best;
        ++accepted;
    }
    for(int i = 1; i <= field.degree(); ++i) field.point(i, y, x) = cur[i - 1];
    return accepted;
}

} // namespace

ObjectiveReport trajectory_objective(std::span<const CorrelationPyramid> pyramids,
                                     const BezierField& field,
                                     const EstimatorConfig& config)
{
    const Objective obj(pyramids, field.degree(), config.smoothness);
    check_field(obj, field);
    ObjectiveReport report;
    report.height = field.height();
    report.width = field.width();
    report.score.assign(static_cast<std::size_t>(report.height) * report.width, 0.0);
#pragma omp parallel for schedule(static)
    for(int y = 0; y < field.height(); ++y) {
        for(int x = 0; x < field.width(); ++x) {
            const std::vector<Vec2> p = gather(field, y, x);
            double j = obj.correlation(y, x, p);
            if(config.smoothness > 0.0) j -= config.smoothness * obj.variation(field, y, x, p);
            report.score[static_cast<std::size_t>(y) * field.width() + x] = j;
        }
    }
    report.trace.push_back(report.mean_score());
    return report;
}

RefineResult refine_step(const BezierField& field,
                         std::span<const CorrelationPyramid> pyramids,
                         double step,
                         const EstimatorConfig& config,
                         Exec exec)
{
    if(!(step > 0.0)) throw std::invalid_argument("refine_step: step must be > 0");
    const Objective obj(pyramids, field.degree(), config.smoothness);
    check_field(obj, field);
    RefineResult result{field, 0};
    BezierField& out = result.field;
    const int h = out.height();
    const int w = out.width();
    const int max_moves = config.max_moves_per_step;

    // Pixel-independent without smoothness; otherwise two colors whose members share no edge.
    const int colors = config.smoothness > 0.0 ? 2 : 1;
    std::size_t accepted = 0;
    for(int color = 0; color < colors; ++color) {
        auto in_pass = [&](int y, int x) { return colors == 1 || ((y + x) & 1) == color; };
        if(exec == Exec::serial) {
            for(int y = 0; y < h; ++y)
                for(int x = 0; x < w; ++x)
                    if(in_pass(y, x)) accepted += poll_pixel(obj, out, y, x, step, max_moves);
        } else {
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : accepted)
            for(int y = 0; y < h; ++y)
                for(int x = 0; x < w; ++x)
                    if(in_pass(y, x)) accepted += poll_pixel(obj, out, y, x, step, max_moves);
        }
    }
    result.accepted = accepted;
    return result;
}

namespace {

/// Vertex offset of the parabola through (−1, a), (0, b), (+1, c); empty unless b is a strict peak.
std::optional<double> parabolic_peak(double a, double b, double c)
{
    const double denom = a - 2.0 * b + c;
    if(!(denom < 0.0) || b < a || b < c) return std::nullopt;
    return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

} // namespace

BezierField subpixel_refine(const BezierField& field,
                            std::span<const CorrelationPyramid> pyramids,
                            const EstimatorConfig& config,
                            Exec exec)
{
    const Objective obj(pyramids, field.degree(), 0.0);
    check_field(obj, field);
    const int n = field.degree();
    const std::size_t views = obj.views();
    constexpr double ridge = 1e-3;

    BezierField out = field;
    auto work = [&](int y, int x) {
        const std::vector<Vec2> p = gather(field, y, x);
        // Normal equations per axis over the views that show a peak.
        std::array<Eigen::MatrixXd, 2> gram{Eigen::MatrixXd::Identity(n, n) * ridge,
                                            Eigen::MatrixXd::Identity(n, n) * ridge};
        std::array<Eigen::VectorXd, 2> rhs{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
        bool any = false;
        for(std::size_t v = 0; v < views; ++v) {
            const CorrelationVolume& vol = obj.level0(v);
            const Vec2 d = obj.displacement(p, v);
            const double px = x + d.x;
            const double py = y + d.y;
            const double kx = std::round(px);
            const double ky = std::round(py);
            const double center = sample_volume(vol, y, x, kx, ky);
            const std::array<std::optional<double>, 2> peak = {
                parabolic_peak(sample_volume(vol, y, x, kx - 1, ky), center, sample_volume(vol, y, x, kx + 1, ky)),
                parabolic_peak(sample_volume(vol, y, x, kx, ky - 1), center, sample_volume(vol, y, x, kx, ky + 1))};
            const std::array<double, 2> target = {kx - px, ky - py};
            Eigen::VectorXd b(n);
            for(int i = 1; i <= n; ++i) b[i - 1] = obj.weights(v)[i];
            for(int axis = 0; axis < 2; ++axis) {
                if(!peak[axis]) continue;
                gram[axis] += b * b.transpose();
                rhs[axis] += b * (target[axis] + *peak[axis]);
                any = true;
            }
        }
        if(!any) return;
        const Eigen::VectorXd dx = gram[0].ldlt().solve(rhs[0]);
        const Eigen::VectorXd dy = gram[1].ldlt().solve(rhs[1]);
        for(int i = 1; i <= n; ++i) out.point(i, y, x) = p[i - 1] + Vec2{dx[i - 1], dy[i - 1]};
    };

    const int h = field.height();
    const int w = field.width();
    if(exec == Exec::serial) {
        for(int y = 0; y < h; ++y)
            for(int x = 0; x < w; ++x) work(y, x);
    } else {
#pragma omp parallel for schedule(static)
        for(int y = 0; y < h; ++y)
            for(int x = 0; x < w; ++x) work(y, x);
    }
    (void)config;
    return out;
}

FieldEstimate optimize_field(std::span<const CorrelationPyramid> pyramids, const EstimatorConfig& config, Exec exec)
{
    config.validate();
    if(pyramids.empty()) throw std::invalid_argument("optimize_field: no correlation pyramids");
    const CorrelationVolume& v0 = pyramids.front().levels.front();
    FieldEstimate est{BezierField(config.degree, v0.height, v0.width), {}};
    est.report = trajectory_objective(pyramids, est.field, config);
    double step = config.initial_step;
    for(int k = 0; k < config.iterations; ++k) {
        RefineResult r = refine_step(est.field, pyramids, step, config, exec);
        est.field = std::move(r.field);
        est.report.accepted_moves += r.accepted;
        est.report.trace.push_back(trajectory_objective(pyramids, est.field, config).mean_score());
        step *= config.step_decay;
    }
    if(config.subpixel)
        for(int round = 0; round < config.subpixel_rounds; ++round)
            est.field = subpixel_refine(est.field, pyramids, config, exec);
    const ObjectiveReport final_report = trajectory_objective(pyramids, est.field, config);
    est.report.score = final_report.score;
    return est;
}

namespace {

int round_up(int value, int multiple)
{
    return (value + multiple - 1) / multiple * multiple;
}

} // namespace

CorrelationSetup build_correlation_setup(const EventStream& events,
                                         std::int64_t t_ref,
                                         std::int64_t t_target,
                                         const std::optional<FramePair>& frames,
                                         const EstimatorConfig& config,
                                         Exec exec)
{
    config.validate();
    if(config.use_images && !frames) throw std::invalid_argument("estimator: use_images requires a frame pair");
    const int m = config.bins_correlation;
    const int n = config.bins_context;
    const int s = config.downsample;

    const VoxelGrid base = build_base_voxel_grid(events, t_ref, t_target, m, n, exec, config.memory_budget);
    const ViewSet views = extract_correlation_views(base, m, n, config.view_stride, config.views);

    int max_levels = std::max(config.levels_target, config.levels_intermediate);
    if(config.use_images) max_levels = std::max(max_levels, config.levels_image);
    const int div = 1 << (max_levels - 1);

    CorrelationSetup setup;
    setup.feature_height = round_up((events.height + s - 1) / s, div);
    setup.feature_width = round_up((events.width + s - 1) / s, div);

    const BaseGridLayout layout{t_ref, t_target, m, n};
    for(const Event& e : events.events)
        if(e.t <= t_target && layout.normalized(e.t) >= 0.0) ++setup.window_events;

    const int fh = setup.feature_height;
    const int fw = setup.feature_width;
    const std::size_t volume_bytes = correlation_pyramid_bytes(fh, fw, max_levels);
    if(volume_bytes > config.memory_budget)
        throw std::length_error("estimator: correlation pyramid exceeds the memory budget");

    const FeatureMap ref = extract_features(views.views.front().grid, s, fh, fw);
    setup.featureless.assign(static_cast<std::size_t>(fh) * fw, 1);
    auto mark_textured = [&](const FeatureMap& f) {
        for(int y = 0; y < fh; ++y)
            for(int x = 0; x < fw; ++x) {
                auto c = f.cell(y, x);
                if(std::any_of(c.begin(), c.end(), [](float v) { return v != 0.0f; }))
                    setup.featureless[static_cast<std::size_t>(y) * fw + x] = 0;
            }
    };
    mark_textured(ref);

    for(std::size_t v = 1; v < views.views.size(); ++v) {
        const bool last = v + 1 == views.views.size();
        const FeatureMap other = extract_features(views.views[v].grid, s, fh, fw);
        setup.pyramids.push_back(build_pyramid(build_correlation_volume(ref, other, exec, config.memory_budget),
                                               last ? config.levels_target : config.levels_intermediate,
                                               views.views[v].tau,
                                               exec));
    }
    if(config.use_images) {
        const Image ref_gray = to_grayscale(frames->reference);
        const Image tgt_gray = to_grayscale(frames->target);
        if(ref_gray.width() != events.width || ref_gray.height() != events.height ||
           tgt_gray.width() != events.width || tgt_gray.height() != events.height)
            throw std::invalid_argument("estimator: frame size differs from the sensor size");
        const FeatureMap fr = extract_features(ref_gray, s, fh, fw);
        const FeatureMap ft = extract_features(tgt_gray, s, fh, fw);
        mark_textured(fr);
        setup.pyramids.push_back(
            build_pyramid(build_correlation_volume(fr, ft, exec, config.memory_budget), config.levels_image, 1.0, exec));
    }
    return setup;
}

FlowEstimate estimate_flow(const EventStream& events,
                           std::int64_t t_ref,
                           std::int64_t t_target,
                           const std::optional<FramePair>& frames,
                           const EstimatorConfig& config,
                           Exec exec)
{
    const CorrelationSetup setup = build_correlation_setup(events, t_ref, t_target, frames, config, exec);
    const int s = config.downsample;
    FlowEstimate result;
    if(setup.window_events == 0) {
        result.coarse = BezierField(config.degree, setup.feature_height, setup.feature_width);
        result.report = trajectory_objective(setup.pyramids, result.coarse, config);
        result.report.no_events = true;
    } else {
        FieldEstimate est = optimize_field(setup.pyramids, config, exec);
        result.coarse = std::move(est.field);
        result.report = std::move(est.report);
        result.report.no_events = setup.window_events == 0;
    }
    result.report.featureless = setup.featureless;

    const BezierField fine = upsample_convex(result.coarse, s);
    result.field = BezierField(config.degree, events.height, events.width);
    for(int i = 1; i <= config.degree; ++i)
        for(int y = 0; y < events.height; ++y)
            for(int x = 0; x < events.width; ++x) result.field.point(i, y, x) = fine.point(i, y, x);
    return result;
}

} // namespace evtraj
