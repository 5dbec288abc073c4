#pragma once

#include "evtraj/common.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace evtraj {

/// One brightness-change record. `t` in microseconds, `p` is +1 or −1.
struct Event
{
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int64_t t = 0;
    std::int8_t p = 1;

    friend bool operator==(const Event&, const Event&) = default;
};

/// Events of one sensor, sorted non-decreasing in t.
struct EventStream
{
    int width = 0;
    int height = 0;
    std::vector<Event> events;
};

/// Throws std::invalid_argument if an event lies outside the raster or timestamps decrease.
void validate(const EventStream& stream);

/// Spatio-temporal tensor bins × height × width with uniformly spaced bin timestamps.
class VoxelGrid
{
public:
    VoxelGrid() = default;
    VoxelGrid(int bins, int height, int width, double t_start, double t_end);

    int bins() const { return bins_; }
    int height() const { return height_; }
    int width() const { return width_; }
    double t_start() const { return t_start_; }
    double t_end() const { return t_end_; }
    const std::vector<double>& bin_timestamps() const { return bin_timestamps_; }

    float& at(int b, int y, int x) { return values_[index(b, y, x)]; }
    float at(int b, int y, int x) const { return values_[index(b, y, x)]; }

    std::span<const float> values() const { return values_; }
    std::span<float> values() { return values_; }
    std::span<const float> bin(int b) const;

    /// Copy of bins [first, first + count) with the matching timestamps.
    VoxelGrid slice(int first, int count) const;

    double sum() const;

    friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

private:
    std::size_t index(int b, int y, int x) const
    {
        return (static_cast<std::size_t>(b) * height_ + y) * width_ + x;
    }

    int bins_ = 0;
    int height_ = 0;
    int width_ = 0;
    double t_start_ = 0.0;
    double t_end_ = 0.0;
    std::vector<double> bin_timestamps_;
    std::vector<float> values_;
};

/// Real bin coordinate (B − 1)(t − t0)/(t_end − t0) in [0, B − 1].
double normalize_event_time(double t, double t0, double t_end, int bins);

/// Bin index and the two triangular-kernel weights for a normalized time t* in [0, B − 1].
struct TemporalSplat
{
    int bin = 0;          // lower bin
    double lower = 1.0;   // weight on `bin`
    double upper = 0.0;   // weight on `bin + 1` (0 when t* is integral)
};
TemporalSplat temporal_splat(double normalized_time);

/// Time layout of the base grid for a trajectory window [t_ref, t_target].
struct BaseGridLayout
{
    std::int64_t t_ref = 0;
    std::int64_t t_target = 0;
    int m = 0; // correlation bins
    int n = 0; // context bins

    int bins() const { return m + n - 1; }
    double bin_duration() const { return static_cast<double>(t_target - t_ref) / (n - 1); }
    double t0() const { return static_cast<double>(t_ref) - bin_duration() * (m - 1); }
    /// Normalized bin coordinate of timestamp t; bin m − 1 is exactly t_ref.
    double normalized(std::int64_t t) const;
};

/// Base voxel grid with M + N − 1 bins over [t0, t_target]. Events before the first
/// recorded timestamp simply do not exist, so reference-side bins are zero-padded.
VoxelGrid build_base_voxel_grid(const EventStream& stream,
                                std::int64_t t_ref,
                                std::int64_t t_target,
                                int m,
                                int n,
                                Exec exec = Exec::parallel,
                                std::size_t memory_budget = default_memory_budget);

/// Context grid: bins [M − 1, M + N − 2].
VoxelGrid extract_context_grid(const VoxelGrid& base, int m, int n);

struct CorrelationView
{
    VoxelGrid grid; // M bins
    double tau = 0.0; // normalized time of the view's last bin
};

struct ViewSet
{
    VoxelGrid context;
    std::vector<CorrelationView> views;
    int reference_index = 0;
};

/// Sliding-window correlation grids: view i starts at bin i·stride and spans M bins.
ViewSet extract_correlation_views(const VoxelGrid& base, int m, int n, int stride, int count);

namespace reference {
/// Direct evaluation of the splatting sum with the triangular kernel over every bin.
VoxelGrid build_base_voxel_grid(const EventStream& stream,
                                std::int64_t t_ref,
                                std::int64_t t_target,
                                int m,
                                int n);
} // namespace reference

} // namespace evtraj
