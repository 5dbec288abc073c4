#pragma once

#include "evtraj/event_representation.hpp"
#include "evtraj/image.hpp"

#include <cstdint>
#include <span>

namespace evtraj {

struct EventSimConfig
{
    double contrast_threshold = 0.2;
    double epsilon = 1e-3; // L = ln(I + ε)
    /// Per-pixel threshold spread (Gaussian σ); 0 keeps the simulator noise-free.
    double threshold_sigma = 0.0;
    std::uint64_t seed = 0;
    /// Slack on threshold crossings; frames are float, so ln(I) carries ~1e-7 of rounding.
    double tolerance = 1e-6;
};

/// Threshold-crossing simulation on linearly interpolated log intensity.
/// `frames` are single-channel, `times` in seconds and uniformly spaced; events carry integer µs
/// timestamps and come out sorted by (t, y, x).
EventStream simulate_events(std::span<const Image> frames,
                            std::span<const double> times,
                            const EventSimConfig& config = {},
                            Exec exec = Exec::parallel);

} // namespace evtraj
