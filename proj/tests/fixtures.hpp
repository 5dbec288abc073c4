#pragma once

#include "evtraj/event_representation.hpp"
#include "evtraj/motion.hpp"

#include <algorithm>
#include <cstdint>

namespace evtraj::test {

/// Sorted random events on a w×h raster with timestamps in [t_lo, t_hi].
inline EventStream random_stream(std::uint64_t seed, int w, int h, int count, std::int64_t t_lo, std::int64_t t_hi)
{
    Rng rng(seed);
    EventStream s{w, h, {}};
    s.events.reserve(count);
    for(int i = 0; i < count; ++i) {
        Event e;
        e.x = static_cast<std::uint16_t>(rng.uniform_int(0, w - 1));
        e.y = static_cast<std::uint16_t>(rng.uniform_int(0, h - 1));
        e.t = t_lo + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(t_hi - t_lo + 1));
        e.t = std::min(e.t, t_hi);
        e.p = rng.bernoulli(0.5) ? 1 : -1;
        s.events.push_back(e);
    }
    std::sort(s.events.begin(), s.events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    return s;
}

} // namespace evtraj::test

#include "evtraj/correlation.hpp"

#include <cmath>
#include <vector>

namespace evtraj::test {

/// Smooth, roughly isotropic random field: per channel a sum of plane waves with random
/// directions and 8–16 px wavelength.
class WaveField
{
public:
    WaveField(std::uint64_t seed, int channels, int waves = 24) : channels_(channels)
    {
        Rng rng(seed);
        for(int c = 0; c < channels; ++c)
            for(int k = 0; k < waves; ++k) {
                const double angle = rng.uniform(0.0, 2.0 * M_PI);
                const double wavelength = rng.uniform(8.0, 16.0);
                const double freq = 2.0 * M_PI / wavelength;
                waves_.push_back({c, freq * std::cos(angle), freq * std::sin(angle), rng.uniform(0.0, 2.0 * M_PI),
                                  rng.uniform(0.5, 1.0)});
            }
    }

    std::vector<double> operator()(double x, double y) const
    {
        std::vector<double> v(channels_, 0.0);
        for(const Wave& w : waves_) v[w.channel] += w.amplitude * std::cos(w.kx * x + w.ky * y + w.phase);
        return v;
    }

    /// Unit-normalized h×w feature map sampled at (x − dx, y − dy).
    FeatureMap features(int h, int w, double dx = 0.0, double dy = 0.0) const
    {
        FeatureMap f;
        f.channels = channels_;
        f.height = h;
        f.width = w;
        f.values.resize(static_cast<std::size_t>(h) * w * channels_);
        for(int y = 0; y < h; ++y)
            for(int x = 0; x < w; ++x) {
                const std::vector<double> v = (*this)(x - dx, y - dy);
                double n2 = 0;
                for(double a : v) n2 += a * a;
                const double inv = n2 > 0 ? 1.0 / std::sqrt(n2) : 0.0;
                for(int c = 0; c < channels_; ++c)
                    f.values[(static_cast<std::size_t>(y) * w + x) * channels_ + c] = static_cast<float>(v[c] * inv);
            }
        return f;
    }

private:
    struct Wave
    {
        int channel;
        double kx, ky, phase, amplitude;
    };
    int channels_;
    std::vector<Wave> waves_;
};

} // namespace evtraj::test
