#include "evtraj/image.hpp"
#include "evtraj/common.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace evtraj {

int thread_count()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_thread_count(int threads)
{
#ifdef _OPENMP
    if(threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels)
{
    if(width < 0 || height < 0 || channels < 0)
        throw std::invalid_argument("Image: negative dimensions");
    pixels_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

std::span<float> Image::plane(int c)
{
    return std::span<float>(pixels_).subspan(static_cast<std::size_t>(c) * width_ * height_,
                                             static_cast<std::size_t>(width_) * height_);
}

std::span<const float> Image::plane(int c) const
{
    return std::span<const float>(pixels_).subspan(static_cast<std::size_t>(c) * width_ * height_,
                                                   static_cast<std::size_t>(width_) * height_);
}

float Image::sample_clamped(int c, double x, double y) const
{
    x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
    const int x0 = std::min(static_cast<int>(x), width_ - 1);
    const int y0 = std::min(static_cast<int>(y), height_ - 1);
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1.0 - fx) * at(c, y0, x0) + fx * at(c, y0, x1);
    const double bottom = (1.0 - fx) * at(c, y1, x0) + fx * at(c, y1, x1);
    return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

float Image::sample_zero(int c, double x, double y) const
{
    if(x < -0.5 || y < -0.5 || x >= width_ - 0.5 || y >= height_ - 0.5) return 0.0f;
    const double fx0 = std::floor(x);
    const double fy0 = std::floor(y);
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const double fx = x - fx0;
    const double fy = y - fy0;
    auto value = [&](int yy, int xx) -> double {
        if(xx < 0 || yy < 0 || xx >= width_ || yy >= height_) return 0.0;
        return at(c, yy, xx);
    };
    const double top = (1.0 - fx) * value(y0, x0) + fx * value(y0, x0 + 1);
    const double bottom = (1.0 - fx) * value(y0 + 1, x0) + fx * value(y0 + 1, x0 + 1);
    return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

Image to_grayscale(const Image& image)
{
    if(image.channels() == 1) return image;
    if(image.channels() < 3) throw std::invalid_argument("to_grayscale: expected 1, 3 or 4 channels");
    Image gray(image.width(), image.height(), 1);
    auto r = image.plane(0);
    auto g = image.plane(1);
    auto b = image.plane(2);
    auto out = gray.plane(0);
    for(std::size_t i = 0; i < out.size(); ++i)
        out[i] = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
    return gray;
}

Image resize_bilinear(const Image& image, int width, int height)
{
    if(width <= 0 || height <= 0) throw std::invalid_argument("resize_bilinear: bad size");
    Image out(width, height, image.channels());
    const double sx = static_cast<double>(image.width()) / width;
    const double sy = static_cast<double>(image.height()) / height;
    for(int c = 0; c < image.channels(); ++c)
        for(int y = 0; y < height; ++y)
            for(int x = 0; x < width; ++x)
                out.at(c, y, x) = image.sample_clamped(c, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
    return out;
}

} // namespace evtraj
