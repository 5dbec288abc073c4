#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evtraj {

/// Planar float image; channel c occupies a contiguous height*width block.
/// Intensities are nominally in [0, 1].
class Image
{
public:
    Image() = default;
    Image(int width, int height, int channels, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return pixels_.empty(); }

    float& at(int c, int y, int x) { return pixels_[index(c, y, x)]; }
    float at(int c, int y, int x) const { return pixels_[index(c, y, x)]; }

    std::span<float> plane(int c);
    std::span<const float> plane(int c) const;
    std::span<const float> data() const { return pixels_; }
    std::span<float> data() { return pixels_; }

    /// Bilinear sample of channel c at continuous coordinate (x, y), pixel centers at integers.
    /// Coordinates outside the raster are clamped to the edge.
    float sample_clamped(int c, double x, double y) const;
    /// Same, but returns 0 outside [−0.5, size−0.5) instead of clamping. Used for alpha.
    float sample_zero(int c, double x, double y) const;

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int c, int y, int x) const
    {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> pixels_;
};

/// Rec. 601 luma of an RGB(A) image; a single-channel image is copied through.
Image to_grayscale(const Image& image);

/// Bilinear resampling of every channel to width × height (pixel-center aligned).
Image resize_bilinear(const Image& image, int width, int height);

} // namespace evtraj
