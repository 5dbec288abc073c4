#include "evtraj/event_simulator.hpp"

#include "evtraj/motion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace evtraj {

namespace {

struct PixelEvent
{
    double t;
    std::int8_t p;
};

// All crossings of one pixel, in emission order.
void simulate_pixel(std::span<const double> log_values,
                    std::span<const double> times,
                    double threshold,
                    double tol,
                    std::vector<PixelEvent>& out)
{
    double level = log_values[0];
    for(std::size_t k = 0; k + 1 < log_values.size(); ++k) {
        const double a = log_values[k];
        const double b = log_values[k + 1];
        if(a == b) continue;
        const double dt = times[k + 1] - times[k];
        if(b > a) {
            while(b - level >= threshold - tol) {
                const double crossing = level + threshold;
                const double frac = std::clamp((crossing - a) / (b - a), 0.0, 1.0);
                out.push_back({times[k] + frac * dt, 1});
                level = crossing;
            }
        } else {
            while(level - b >= threshold - tol) {
                const double crossing = level - threshold;
                const double frac = std::clamp((a - crossing) / (a - b), 0.0, 1.0);
                out.push_back({times[k] + frac * dt, -1});
                level = crossing;
            }
        }
    }
}

} // namespace

EventStream simulate_events(std::span<const Image> frames,
                            std::span<const double> times,
                            const EventSimConfig& config,
                            Exec exec)
{
    if(frames.size() != times.size()) throw std::invalid_argument("simulate_events: frame/time count mismatch");
    if(!(config.contrast_threshold > 0.0)) throw std::invalid_argument("simulate_events: threshold must be > 0");
    if(!(config.epsilon > 0.0)) throw std::invalid_argument("simulate_events: epsilon must be > 0");
    EventStream stream;
    if(frames.empty()) return stream;
    const int W = frames[0].width();
    const int H = frames[0].height();
    if(W > 65535 || H > 65535) throw std::invalid_argument("simulate_events: raster too large for u16 coordinates");
    stream.width = W;
    stream.height = H;
    for(const Image& f : frames)
        if(f.width() != W || f.height() != H || f.channels() != 1)
            throw std::invalid_argument("simulate_events: frames must be single-channel with equal size");
    if(frames.size() >= 2) {
        const double dt = times[1] - times[0];
        if(!(dt > 0.0)) throw std::invalid_argument("simulate_events: timestamps must increase");
        for(std::size_t k = 1; k < times.size(); ++k)
            if(std::abs((times[k] - times[k - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(dt)) + 1e-12)
                throw std::invalid_argument("simulate_events: timestamps are not uniformly spaced");
    }

    const std::size_t frames_n = frames.size();
    std::vector<std::vector<Event>> rows(H);

    auto row = [&](int y) {
        std::vector<double> lv(frames_n);
        std::vector<PixelEvent> pe;
        std::vector<Event>& out = rows[y];
        for(int x = 0; x < W; ++x) {
            for(std::size_t k = 0; k < frames_n; ++k)
                lv[k] = std::log(static_cast<double>(frames[k].at(0, y, x)) + config.epsilon);
            double c = config.contrast_threshold;
            if(config.threshold_sigma > 0.0) {
                Rng rng(split_seed(config.seed, static_cast<std::uint64_t>(y) * W + x));
                c = std::max(0.01, c + config.threshold_sigma * rng.normal());
            }
            pe.clear();
            simulate_pixel(lv, times, c, config.tolerance, pe);
            for(const PixelEvent& e : pe)
                out.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                               static_cast<std::int64_t>(std::llround(e.t * 1e6)), e.p});
        }
    };
    if(exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for(int y = 0; y < H; ++y) row(y);
    } else {
        for(int y = 0; y < H; ++y) row(y);
    }

    std::size_t total = 0;
    for(const auto& r : rows) total += r.size();
    stream.events.reserve(total);
    for(const auto& r : rows) stream.events.insert(stream.events.end(), r.begin(), r.end());
    // Rows are concatenated in order and each pixel's events are chronological, so a stable
    // sort on (t, y, x) is independent of the thread schedule.
    std::stable_sort(stream.events.begin(), stream.events.end(), [](const Event& a, const Event& b) {
        return std::tie(a.t, a.y, a.x) < std::tie(b.t, b.y, b.x);
    });
    return stream;
}

} // namespace evtraj
