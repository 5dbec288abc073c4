#include "evtraj/event_representation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace evtraj {

void validate(const EventStream& stream)
{
    std::int64_t last = std::numeric_limits<std::int64_t>::min();
    for(const Event& e : stream.events) {
        if(e.x >= stream.width || e.y >= stream.height)
            throw std::invalid_argument("event outside the sensor raster");
        if(e.t < last) throw std::invalid_argument("event timestamps are not sorted");
        last = e.t;
    }
}

VoxelGrid::VoxelGrid(int bins, int height, int width, double t_start, double t_end)
    : bins_(bins), height_(height), width_(width), t_start_(t_start), t_end_(t_end)
{
    if(bins < 1 || height < 0 || width < 0) throw std::invalid_argument("VoxelGrid: bad shape");
    if(bins > 1 && !(t_end > t_start)) throw std::invalid_argument("VoxelGrid: t_end must exceed t_start");
    bin_timestamps_.resize(bins);
    const double step = bins > 1 ? (t_end - t_start) / (bins - 1) : 0.0;
    for(int b = 0; b < bins; ++b) bin_timestamps_[b] = t_start + step * b;
    if(bins > 1) bin_timestamps_.back() = t_end;
    values_.assign(static_cast<std::size_t>(bins) * height * width, 0.0f);
}

std::span<const float> VoxelGrid::bin(int b) const
{
    const std::size_t plane = static_cast<std::size_t>(height_) * width_;
    return std::span<const float>(values_).subspan(plane * b, plane);
}

VoxelGrid VoxelGrid::slice(int first, int count) const
{
    if(first < 0 || count < 1 || first + count > bins_)
        throw std::out_of_range("VoxelGrid::slice: bins out of range");
    VoxelGrid out;
    out.bins_ = count;
    out.height_ = height_;
    out.width_ = width_;
    out.bin_timestamps_.assign(bin_timestamps_.begin() + first, bin_timestamps_.begin() + first + count);
    out.t_start_ = out.bin_timestamps_.front();
    out.t_end_ = out.bin_timestamps_.back();
    const std::size_t plane = static_cast<std::size_t>(height_) * width_;
    out.values_.assign(values_.begin() + plane * first, values_.begin() + plane * (first + count));
    return out;
}

double VoxelGrid::sum() const
{
    double total = 0.0;
    for(float v : values_) total += v;
    return total;
}

double normalize_event_time(double t, double t0, double t_end, int bins)
{
    if(bins < 2) throw std::invalid_argument("normalize_event_time: need at least 2 bins");
    if(!(t_end > t0)) throw std::invalid_argument("normalize_event_time: degenerate time window");
    if(t < t0 || t > t_end) throw std::out_of_range("normalize_event_time: timestamp outside window");
    return (bins - 1) * (t - t0) / (t_end - t0);
}

TemporalSplat temporal_splat(double normalized_time)
{
    TemporalSplat s;
    const double lower_bin = std::floor(normalized_time);
    s.bin = static_cast<int>(lower_bin);
    s.upper = normalized_time - lower_bin;
    s.lower = 1.0 - s.upper;
    return s;
}

double BaseGridLayout::normalized(std::int64_t t) const
{
    return (m - 1) + static_cast<double>(n - 1) * static_cast<double>(t - t_ref) /
                         static_cast<double>(t_target - t_ref);
}

namespace {

BaseGridLayout checked_layout(std::int64_t t_ref, std::int64_t t_target, int m, int n)
{
    if(m < 2 || n < 2) throw std::invalid_argument("base voxel grid: M and N must be at least 2");
    if(t_target <= t_ref) throw std::invalid_argument("base voxel grid: t_target must exceed t_ref");
    return BaseGridLayout{t_ref, t_target, m, n};
}

void deposit(VoxelGrid& grid, const Event& e, double normalized)
{
    const TemporalSplat s = temporal_splat(normalized);
    grid.at(s.bin, e.y, e.x) += static_cast<float>(e.p * s.lower);
    if(s.upper > 0.0) grid.at(s.bin + 1, e.y, e.x) += static_cast<float>(e.p * s.upper);
}

} // namespace

VoxelGrid build_base_voxel_grid(const EventStream& stream,
                                std::int64_t t_ref,
                                std::int64_t t_target,
                                int m,
                                int n,
                                Exec exec,
                                std::size_t memory_budget)
{
    const BaseGridLayout layout = checked_layout(t_ref, t_target, m, n);
    const std::size_t bytes =
        static_cast<std::size_t>(layout.bins()) * stream.height * stream.width * sizeof(float);
    if(bytes > memory_budget)
        throw std::length_error("base voxel grid of " + std::to_string(bytes) +
                                " bytes exceeds the memory budget");

    VoxelGrid grid(layout.bins(), stream.height, stream.width, layout.t0(), static_cast<double>(t_target));
    const double t0 = layout.t0();
    const auto& events = stream.events;

    // Events are time-sorted, so the in-window range is contiguous.
    auto first = std::lower_bound(events.begin(), events.end(), t0, [](const Event& e, double t) {
        return static_cast<double>(e.t) < t;
    });
    auto last = std::upper_bound(first, events.end(), t_target, [](std::int64_t t, const Event& e) {
        return t < e.t;
    });
    const std::size_t begin = static_cast<std::size_t>(first - events.begin());
    const std::size_t end = static_cast<std::size_t>(last - events.begin());
    for(std::size_t k = begin; k < end; ++k)
        if(events[k].x >= stream.width || events[k].y >= stream.height)
            throw std::invalid_argument("base voxel grid: event outside the sensor raster");

    if(exec == Exec::serial) {
        for(std::size_t k = begin; k < end; ++k) {
            const double nt = layout.normalized(events[k].t);
            if(nt < 0.0) continue;
            deposit(grid, events[k], nt);
        }
        return grid;
    }

    // Row bands per thread: every voxel receives its contributions in stream order,
    // so the result is bit-identical to the serial loop.
#pragma omp parallel
    {
#ifdef _OPENMP
        const int tid = omp_get_thread_num();
        const int nthreads = omp_get_num_threads();
#else
        const int tid = 0;
        const int nthreads = 1;
#endif
        const int row_begin = static_cast<int>(static_cast<long long>(stream.height) * tid / nthreads);
        const int row_end = static_cast<int>(static_cast<long long>(stream.height) * (tid + 1) / nthreads);
        for(std::size_t k = begin; k < end; ++k) {
            const Event& e = events[k];
            if(e.y < row_begin || e.y >= row_end) continue;
            const double nt = layout.normalized(e.t);
            if(nt < 0.0) continue;
            deposit(grid, e, nt);
        }
    }
    return grid;
}

VoxelGrid extract_context_grid(const VoxelGrid& base, int m, int n)
{
    if(m < 2 || n < 2 || base.bins() != m + n - 1)
        throw std::invalid_argument("extract_context_grid: base grid must have M + N - 1 bins");
    return base.slice(m - 1, n);
}

ViewSet extract_correlation_views(const VoxelGrid& base, int m, int n, int stride, int count)
{
    if(m < 2 || n < 2 || base.bins() != m + n - 1)
        throw std::invalid_argument("extract_correlation_views: base grid must have M + N - 1 bins");
    if(stride < 1 || count < 1)
        throw std::invalid_argument("extract_correlation_views: stride and count must be positive");
    if(static_cast<long long>(count - 1) * stride > n - 1)
        throw std::out_of_range("extract_correlation_views: views overrun the base grid");

    ViewSet set;
    set.context = extract_context_grid(base, m, n);
    set.views.reserve(count);
    for(int i = 0; i < count; ++i) {
        const int start = i * stride;
        set.views.push_back({base.slice(start, m), static_cast<double>(start) / (n - 1)});
    }
    return set;
}

namespace reference {

VoxelGrid build_base_voxel_grid(const EventStream& stream,
                                std::int64_t t_ref,
                                std::int64_t t_target,
                                int m,
                                int n)
{
    if(m < 2 || n < 2 || t_target <= t_ref) throw std::invalid_argument("reference voxel grid: bad layout");
    const int bins = m + n - 1;
    const double dt = static_cast<double>(t_target - t_ref) / (n - 1);
    const double t0 = static_cast<double>(t_ref) - dt * (m - 1);
    VoxelGrid grid(bins, stream.height, stream.width, t0, static_cast<double>(t_target));
    for(const Event& e : stream.events) {
        const double t = static_cast<double>(e.t);
        if(t < t0 || t > static_cast<double>(t_target)) continue;
        const double nt = normalize_event_time(t, t0, static_cast<double>(t_target), bins);
        for(int b = 0; b < bins; ++b) {
            const double k = std::max(0.0, 1.0 - std::abs(b - nt));
            if(k > 0.0) grid.at(b, e.y, e.x) += static_cast<float>(e.p * k);
        }
    }
    return grid;
}

} // namespace reference

} // namespace evtraj
