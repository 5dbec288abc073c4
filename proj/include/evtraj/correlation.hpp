#pragma once

#include "evtraj/bezier_flow.hpp"
#include "evtraj/common.hpp"
#include "evtraj/event_representation.hpp"
#include "evtraj/image.hpp"

#include <span>
#include <string>
#include <vector>

namespace evtraj {

/// Unit-norm (or exactly zero) feature vectors on a grid downsampled by `factor`.
/// Storage is cell-major: the `channels` values of one cell are contiguous.
struct FeatureMap
{
    int channels = 0;
    int height = 0;
    int width = 0;
    int factor = 1;
    std::string source;
    std::vector<float> values;

    std::span<const float> cell(int y, int x) const
    {
        return std::span<const float>(values).subspan((static_cast<std::size_t>(y) * width + x) * channels,
                                                      channels);
    }
    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

/// Hand-crafted correlation features. Per output cell: the s×s block mean of every input
/// channel, then block means of |horizontal| and |vertical| forward differences, L2-normalized.
/// The input is reflect-padded to out_height*s × out_width*s (defaults: ceil(H/s), ceil(W/s)).
FeatureMap extract_features(std::span<const float> planes,
                            int channels,
                            int height,
                            int width,
                            int factor,
                            int out_height = -1,
                            int out_width = -1);
FeatureMap extract_features(const VoxelGrid& grid, int factor, int out_height = -1, int out_width = -1);
FeatureMap extract_features(const Image& gray, int factor, int out_height = -1, int out_width = -1);

/// 4-D volume C[i][j][k][l]: reference cell (i, j) against target cell (k, l).
struct CorrelationVolume
{
    int height = 0;        // reference grid
    int width = 0;
    int target_height = 0; // pooled target grid
    int target_width = 0;
    std::vector<float> data;

    std::size_t slice_size() const { return static_cast<std::size_t>(target_height) * target_width; }
    std::span<const float> slice(int i, int j) const
    {
        return std::span<const float>(data).subspan((static_cast<std::size_t>(i) * width + j) * slice_size(),
                                                    slice_size());
    }
    float at(int i, int j, int k, int l) const
    {
        return data[(static_cast<std::size_t>(i) * width + j) * slice_size() +
                    static_cast<std::size_t>(k) * target_width + l];
    }
};

/// Bytes needed by an L-level pyramid over an h×w feature grid.
std::size_t correlation_pyramid_bytes(int height, int width, int levels);

CorrelationVolume build_correlation_volume(const FeatureMap& ref,
                                           const FeatureMap& other,
                                           Exec exec = Exec::parallel,
                                           std::size_t memory_budget = default_memory_budget);

struct CorrelationPyramid
{
    std::vector<CorrelationVolume> levels;
    double tau = 1.0; // normalized time of the non-reference operand
};

/// Level l + 1 is 2×2 average pooling of level l over the target dimensions.
CorrelationPyramid build_pyramid(CorrelationVolume volume, int levels, double tau, Exec exec = Exec::parallel);

/// Target coordinate at pyramid level l: (x + 0.5) / 2^l − 0.5, so pooled cells sit at the
/// centre of the cells they average.
double pooled_coordinate(double x, int level);

/// Bilinear sample of one reference cell's slice at target position (x, y); zero outside.
float sample_volume(const CorrelationVolume& volume, int i, int j, double x, double y);

/// Concatenated neighborhood samples, per pixel: views × levels × (2r+1)² values,
/// offsets ordered dy-major then dx.
struct LookupFeatures
{
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> values;

    std::span<const float> cell(int y, int x) const
    {
        return std::span<const float>(values).subspan((static_cast<std::size_t>(y) * width + x) * channels,
                                                      channels);
    }
};

LookupFeatures lookup(std::span<const CorrelationPyramid> pyramids,
                      const BezierField& field,
                      int radius,
                      Exec exec = Exec::parallel);

namespace reference {
/// Quadruple loop with double accumulation.
CorrelationVolume build_correlation_volume(const FeatureMap& ref, const FeatureMap& other);
CorrelationPyramid build_pyramid(const CorrelationVolume& volume, int levels, double tau);
} // namespace reference

} // namespace evtraj
