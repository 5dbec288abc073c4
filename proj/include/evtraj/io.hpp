#pragma once

#include "evtraj/bezier_flow.hpp"
#include "evtraj/event_representation.hpp"
#include "evtraj/image.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evtraj {

/// Writes to a sibling temporary file and renames it over `path`.
void atomic_write(const std::string& path, std::string_view bytes);
std::string read_file(const std::string& path);

/// Shortest text that round-trips the double exactly.
std::string format_double(double v);

/// Ordered `key = value` text with `#` comments. Keys keep insertion order on output.
class KeyValues
{
public:
    static KeyValues parse(std::string_view text, const std::string& origin = "<string>");
    static KeyValues load(const std::string& path);

    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value) { set(key, format_double(value)); }
    void set(const std::string& key, int value) { set(key, std::to_string(value)); }
    void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
    void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
    void set(const std::string& key, const char* value) { set(key, std::string(value)); }

    bool has(const std::string& key) const;
    std::optional<std::string> find(const std::string& key) const;
    /// Typed getters throw IoError(format) naming the origin and key on a malformed value.
    std::string get(const std::string& key, const std::string& fallback) const;
    double get(const std::string& key, double fallback) const;
    int get(const std::string& key, int fallback) const;
    std::uint64_t get(const std::string& key, std::uint64_t fallback) const;
    bool get(const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& key) const;

    /// Throws IoError(format) if a key is not listed in `known` (prefix match when the entry ends with '.').
    void check_known(const std::vector<std::string>& known) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    std::string str() const;
    void save(const std::string& path) const { atomic_write(path, str()); }
    const std::string& origin() const { return origin_; }

private:
    std::string origin_ = "<memory>";
    std::vector<std::pair<std::string, std::string>> entries_;
};

// Events: "EVF1", u16 W, u16 H, u64 count, then count × (u16 x, u16 y, i64 t, i8 p), little endian.
void write_events(const std::string& path, const EventStream& stream);
EventStream read_events(const std::string& path);

// f32 tensors with a text sidecar at `path + ".meta"`.
void write_flow(const std::string& path, const FlowMap& flow);
FlowMap read_flow(const std::string& path);
void write_voxel_grid(const std::string& path, const VoxelGrid& grid);
VoxelGrid read_voxel_grid(const std::string& path);
void write_bezier(const std::string& path, const BezierField& field);
BezierField read_bezier(const std::string& path);
std::string sidecar_path(const std::string& path);

/// Images: 8-bit PNG when built with libpng, binary PGM/PPM always.
bool png_supported();
/// ".png" when libpng is available, else ".ppm".
std::string default_image_extension();
void write_image(const std::string& path, const Image& image);
Image read_image(const std::string& path);

/// Flow wheel: hue from direction, saturation from magnitude / max; zero flow is white.
Image colorize_flow(const FlowMap& flow, std::optional<double> max_magnitude = std::nullopt);

/// Bresenham line into an RGB image, clipped to the raster.
void draw_line(Image& rgb, Vec2 a, Vec2 b, const float color[3]);

} // namespace evtraj
