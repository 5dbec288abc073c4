#include "evtraj/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace evtraj {

namespace {

int reflect_index(int i, int size)
{
    if(size == 1) return 0;
    const int period = 2 * size - 2;
    i %= period;
    if(i < 0) i += period;
    return i < size ? i : period - i;
}

} // namespace

FeatureMap extract_features(std::span<const float> planes,
                            int channels,
                            int height,
                            int width,
                            int factor,
                            int out_height,
                            int out_width)
{
    if(factor < 1) throw std::invalid_argument("extract_features: factor must be >= 1");
    if(channels < 1 || height < 1 || width < 1) throw std::invalid_argument("extract_features: empty input");
    if(planes.size() != static_cast<std::size_t>(channels) * height * width)
        throw std::invalid_argument("extract_features: plane size mismatch");
    if(out_height < 0) out_height = (height + factor - 1) / factor;
    if(out_width < 0) out_width = (width + factor - 1) / factor;

    FeatureMap fm;
    fm.channels = 3 * channels;
    fm.height = out_height;
    fm.width = out_width;
    fm.factor = factor;
    fm.values.assign(static_cast<std::size_t>(out_height) * out_width * fm.channels, 0.0f);

    const std::size_t plane = static_cast<std::size_t>(height) * width;
    const double inv_area = 1.0 / (static_cast<double>(factor) * factor);

#pragma omp parallel for schedule(static)
    for(int cy = 0; cy < out_height; ++cy) {
        std::vector<double> acc(fm.channels);
        for(int cx = 0; cx < out_width; ++cx) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for(int c = 0; c < channels; ++c) {
                const float* src = planes.data() + plane * c;
                for(int sy = 0; sy < factor; ++sy) {
                    const int py = cy * factor + sy;
                    const int y = reflect_index(py, height);
                    const int y1 = reflect_index(py + 1, height);
                    for(int sx = 0; sx < factor; ++sx) {
                        const int px = cx * factor + sx;
                        const int x = reflect_index(px, width);
                        const int x1 = reflect_index(px + 1, width);
                        const double v = src[static_cast<std::size_t>(y) * width + x];
                        acc[c] += v;
                        acc[channels + c] += std::abs(src[static_cast<std::size_t>(y) * width + x1] - v);
                        acc[2 * channels + c] += std::abs(src[static_cast<std::size_t>(y1) * width + x] - v);
                    }
                }
            }
            double norm2 = 0.0;
            for(double& a : acc) {
                a *= inv_area;
                norm2 += a * a;
            }
            if(norm2 < 1e-24) continue;
            const double inv = 1.0 / std::sqrt(norm2);
            float* dst = fm.values.data() + (static_cast<std::size_t>(cy) * out_width + cx) * fm.channels;
            for(int k = 0; k < fm.channels; ++k) dst[k] = static_cast<float>(acc[k] * inv);
        }
    }
    return fm;
}

FeatureMap extract_features(const VoxelGrid& grid, int factor, int out_height, int out_width)
{
    FeatureMap fm =
        extract_features(grid.values(), grid.bins(), grid.height(), grid.width(), factor, out_height, out_width);
    fm.source = "voxel";
    return fm;
}

FeatureMap extract_features(const Image& gray, int factor, int out_height, int out_width)
{
    FeatureMap fm =
        extract_features(gray.data(), gray.channels(), gray.height(), gray.width(), factor, out_height, out_width);
    fm.source = "image";
    return fm;
}

std::size_t correlation_pyramid_bytes(int height, int width, int levels)
{
    std::size_t total = 0;
    for(int l = 0; l < levels; ++l)
        total += static_cast<std::size_t>(height) * width * (height >> l) * (width >> l) * sizeof(float);
    return total;
}

namespace {

void check_operands(const FeatureMap& ref, const FeatureMap& other)
{
    if(ref.channels != other.channels || ref.height != other.height || ref.width != other.width)
        throw std::invalid_argument("correlation volume: feature map shapes differ");
}

CorrelationVolume allocate(const FeatureMap& ref, std::size_t memory_budget)
{
    const std::size_t bytes = correlation_pyramid_bytes(ref.height, ref.width, 1);
    if(bytes > memory_budget)
        throw std::length_error("correlation volume of " + std::to_string(bytes) +
                                " bytes exceeds the memory budget");
    CorrelationVolume v;
    v.height = ref.height;
    v.width = ref.width;
    v.target_height = ref.height;
    v.target_width = ref.width;
    v.data.assign(bytes / sizeof(float), 0.0f);
    return v;
}

CorrelationVolume pool(const CorrelationVolume& in, Exec exec)
{
    CorrelationVolume out;
    out.height = in.height;
    out.width = in.width;
    out.target_height = in.target_height / 2;
    out.target_width = in.target_width / 2;
    out.data.assign(static_cast<std::size_t>(out.height) * out.width * out.slice_size(), 0.0f);
    const int cells = in.height * in.width;
#pragma omp parallel for schedule(static) if(exec == Exec::parallel)
    for(int c = 0; c < cells; ++c) {
        const float* src = in.data.data() + static_cast<std::size_t>(c) * in.slice_size();
        float* dst = out.data.data() + static_cast<std::size_t>(c) * out.slice_size();
        for(int k = 0; k < out.target_height; ++k) {
            const float* r0 = src + static_cast<std::size_t>(2 * k) * in.target_width;
            const float* r1 = r0 + in.target_width;
            for(int l = 0; l < out.target_width; ++l)
                dst[static_cast<std::size_t>(k) * out.target_width + l] =
                    0.25f * ((r0[2 * l] + r0[2 * l + 1]) + (r1[2 * l] + r1[2 * l + 1]));
        }
    }
    return out;
}

void check_levels(const CorrelationVolume& volume, int levels)
{
    if(levels < 1) throw std::invalid_argument("build_pyramid: need at least one level");
    const int div = 1 << (levels - 1);
    if(volume.target_height % div != 0 || volume.target_width % div != 0)
        throw std::invalid_argument("build_pyramid: target grid not divisible by 2^(L-1)");
}

} // namespace

CorrelationVolume build_correlation_volume(const FeatureMap& ref,
                                           const FeatureMap& other,
                                           Exec exec,
                                           std::size_t memory_budget)
{
    check_operands(ref, other);
    CorrelationVolume v = allocate(ref, memory_budget);
    const int cells = ref.height * ref.width;
    const int d = ref.channels;
#pragma omp parallel for schedule(dynamic, 16) if(exec == Exec::parallel)
    for(int a = 0; a < cells; ++a) {
        const float* fa = ref.values.data() + static_cast<std::size_t>(a) * d;
        float* dst = v.data.data() + static_cast<std::size_t>(a) * cells;
        bool zero = true;
        for(int h = 0; h < d; ++h) zero = zero && fa[h] == 0.0f;
        if(zero) continue;
        for(int b = 0; b < cells; ++b) {
            const float* fb = other.values.data() + static_cast<std::size_t>(b) * d;
            float dot = 0.0f;
            for(int h = 0; h < d; ++h) dot += fa[h] * fb[h];
            dst[b] = dot;
        }
    }
    return v;
}

CorrelationPyramid build_pyramid(CorrelationVolume volume, int levels, double tau, Exec exec)
{
    check_levels(volume, levels);
    CorrelationPyramid p;
    p.tau = tau;
    p.levels.reserve(levels);
    p.levels.push_back(std::move(volume));
    for(int l = 1; l < levels; ++l) p.levels.push_back(pool(p.levels.back(), exec));
    return p;
}

double pooled_coordinate(double x, int level)
{
    const double scale = static_cast<double>(1 << level);
    return (x + 0.5) / scale - 0.5;
}

float sample_volume(const CorrelationVolume& volume, int i, int j, double x, double y)
{
    const double fx0 = std::floor(x);
    const double fy0 = std::floor(y);
    // Entirely outside: every corner reads zero.
    if(fx0 < -1.0 || fy0 < -1.0 || fx0 >= volume.target_width || fy0 >= volume.target_height) return 0.0f;
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const double ax = x - fx0;
    const double ay = y - fy0;
    const float* s = volume.data.data() + (static_cast<std::size_t>(i) * volume.width + j) * volume.slice_size();
    auto value = [&](int yy, int xx) -> double {
        if(xx < 0 || yy < 0 || xx >= volume.target_width || yy >= volume.target_height) return 0.0;
        return s[static_cast<std::size_t>(yy) * volume.target_width + xx];
    };
    double result = 0.0;
    if(ay < 1.0) {
        const double w = 1.0 - ay;
        result += w * ((1.0 - ax) * value(y0, x0) + (ax > 0.0 ? ax * value(y0, x0 + 1) : 0.0));
    }
    if(ay > 0.0) result += ay * ((1.0 - ax) * value(y0 + 1, x0) + (ax > 0.0 ? ax * value(y0 + 1, x0 + 1) : 0.0));
    return static_cast<float>(result);
}

LookupFeatures lookup(std::span<const CorrelationPyramid> pyramids, const BezierField& field, int radius, Exec exec)
{
    if(radius < 0) throw std::invalid_argument("lookup: negative radius");
    if(pyramids.empty()) throw std::invalid_argument("lookup: no correlation pyramids");
    const int taps = (2 * radius + 1) * (2 * radius + 1);
    LookupFeatures out;
    out.height = field.height();
    out.width = field.width();
    out.channels = 0;
    std::vector<std::vector<double>> weights;
    for(const CorrelationPyramid& p : pyramids) {
        if(p.levels.empty()) throw std::invalid_argument("lookup: view without a pyramid");
        if(p.levels.front().height != field.height() || p.levels.front().width != field.width())
            throw std::invalid_argument("lookup: field is not at feature resolution");
        out.channels += static_cast<int>(p.levels.size()) * taps;
        weights.push_back(bernstein_weights(field.degree(), p.tau));
    }
    out.values.assign(static_cast<std::size_t>(out.height) * out.width * out.channels, 0.0f);

    auto work = [&](int y, int x) {
        float* dst = out.values.data() + (static_cast<std::size_t>(y) * out.width + x) * out.channels;
        for(std::size_t v = 0; v < pyramids.size(); ++v) {
            const Vec2 d = field.displacement(weights[v], y, x);
            const double px = x + d.x;
            const double py = y + d.y;
            for(std::size_t l = 0; l < pyramids[v].levels.size(); ++l) {
                const double cx = pooled_coordinate(px, static_cast<int>(l));
                const double cy = pooled_coordinate(py, static_cast<int>(l));
                for(int dy = -radius; dy <= radius; ++dy)
                    for(int dx = -radius; dx <= radius; ++dx)
                        *dst++ = sample_volume(pyramids[v].levels[l], y, x, cx + dx, cy + dy);
            }
        }
    };

    if(exec == Exec::serial) {
        for(int y = 0; y < out.height; ++y)
            for(int x = 0; x < out.width; ++x) work(y, x);
    } else {
#pragma omp parallel for schedule(static)
        for(int y = 0; y < out.height; ++y)
            for(int x = 0; x < out.width; ++x) work(y, x);
    }
    return out;
}

namespace reference {

CorrelationVolume build_correlation_volume(const FeatureMap& ref, const FeatureMap& other)
{
    check_operands(ref, other);
    CorrelationVolume v = allocate(ref, default_memory_budget);
    for(int i = 0; i < ref.height; ++i)
        for(int j = 0; j < ref.width; ++j)
            for(int k = 0; k < other.height; ++k)
                for(int l = 0; l < other.width; ++l) {
                    double dot = 0.0;
                    for(int h = 0; h < ref.channels; ++h)
                        dot += static_cast<double>(ref.cell(i, j)[h]) * other.cell(k, l)[h];
                    v.data[((static_cast<std::size_t>(i) * ref.width + j) * ref.height + k) * ref.width + l] =
                        static_cast<float>(dot);
                }
    return v;
}

CorrelationPyramid build_pyramid(const CorrelationVolume& volume, int levels, double tau)
{
    check_levels(volume, levels);
    CorrelationPyramid p;
    p.tau = tau;
    p.levels.push_back(volume);
    for(int l = 1; l < levels; ++l) {
        const CorrelationVolume& in = p.levels.back();
        CorrelationVolume out;
        out.height = in.height;
        out.width = in.width;
        out.target_height = in.target_height / 2;
        out.target_width = in.target_width / 2;
        out.data.resize(static_cast<std::size_t>(out.height) * out.width * out.slice_size());
        for(int i = 0; i < in.height; ++i)
            for(int j = 0; j < in.width; ++j)
                for(int k = 0; k < out.target_height; ++k)
                    for(int m = 0; m < out.target_width; ++m) {
                        double s = 0.0;
                        for(int a = 0; a < 2; ++a)
                            for(int b = 0; b < 2; ++b) s += in.at(i, j, 2 * k + a, 2 * m + b);
                        out.data[((static_cast<std::size_t>(i) * out.width + j) * out.target_height + k) *
                                     out.target_width +
                                 m] = static_cast<float>(s / 4.0);
                    }
        p.levels.push_back(std::move(out));
    }
    return p;
}

} // namespace reference

} // namespace evtraj
