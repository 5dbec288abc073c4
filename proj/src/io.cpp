#include "evtraj/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <system_error>

#ifdef EVTRAJ_HAVE_PNG
#include <png.h>
#endif

namespace evtraj {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

namespace {

template<typename T>
void put_le(std::string& out, T v)
{
    using U = std::make_unsigned_t<T>;
    U u;
    std::memcpy(&u, &v, sizeof u);
    for(std::size_t i = 0; i < sizeof u; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f)
{
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_le(out, u);
}

template<typename T>
T get_le(const unsigned char* p)
{
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for(std::size_t i = 0; i < sizeof u; ++i) u |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
    T v;
    std::memcpy(&v, &u, sizeof v);
    return v;
}

float get_f32(const unsigned char* p)
{
    const std::uint32_t u = get_le<std::uint32_t>(p);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if(b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

IoError format_error(const std::string& path, const std::string& what)
{
    return IoError(IoError::Kind::format, path, what);
}

std::string extension(const std::string& path)
{
    std::string e = fs::path(path).extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

} // namespace

void atomic_write(const std::string& path, std::string_view bytes)
{
    const fs::path target(path);
    if(target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
        if(ec) throw IoError(IoError::Kind::write_failed, path, "cannot create directory: " + ec.message());
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if(!out) throw IoError(IoError::Kind::write_failed, path, "cannot open for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if(!out) throw IoError(IoError::Kind::write_failed, path, "write failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if(ec) {
        fs::remove(tmp, ec);
        throw IoError(IoError::Kind::write_failed, path, "rename failed");
    }
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if(!in) throw IoError(IoError::Kind::open_failed, path, "cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// ---- key-value text ----

KeyValues KeyValues::parse(std::string_view text, const std::string& origin)
{
    KeyValues kv;
    kv.origin_ = origin;
    std::size_t line_no = 0;
    while(!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if(const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string t = trim(line);
        if(t.empty()) continue;
        const auto eq = t.find('=');
        if(eq == std::string::npos)
            throw format_error(origin, "line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if(key.empty()) throw format_error(origin, "line " + std::to_string(line_no) + ": empty key");
        if(kv.has(key)) throw format_error(origin, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        kv.entries_.emplace_back(key, trim(std::string_view(t).substr(eq + 1)));
    }
    return kv;
}

KeyValues KeyValues::load(const std::string& path)
{
    return parse(read_file(path), path);
}

void KeyValues::set(const std::string& key, const std::string& value)
{
    for(auto& [k, v] : entries_)
        if(k == key) {
            v = value;
            return;
        }
    entries_.emplace_back(key, value);
}

bool KeyValues::has(const std::string& key) const
{
    return find(key).has_value();
}

std::optional<std::string> KeyValues::find(const std::string& key) const
{
    for(const auto& [k, v] : entries_)
        if(k == key) return v;
    return std::nullopt;
}

std::string KeyValues::get(const std::string& key, const std::string& fallback) const
{
    return find(key).value_or(fallback);
}

namespace {

template<typename T>
T parse_number(const std::string& s, const std::string& origin, const std::string& key)
{
    T v{};
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if(!s.empty() && *b == '+') ++b;
    const auto res = std::from_chars(b, e, v);
    if(res.ec != std::errc{} || res.ptr != e) throw format_error(origin, "key '" + key + "': bad number '" + s + "'");
    return v;
}

} // namespace

double KeyValues::get(const std::string& key, double fallback) const
{
    const auto v = find(key);
    return v ? parse_number<double>(*v, origin_, key) : fallback;
}

int KeyValues::get(const std::string& key, int fallback) const
{
    const auto v = find(key);
    return v ? parse_number<int>(*v, origin_, key) : fallback;
}

std::uint64_t KeyValues::get(const std::string& key, std::uint64_t fallback) const
{
    const auto v = find(key);
    return v ? parse_number<std::uint64_t>(*v, origin_, key) : fallback;
}

bool KeyValues::get(const std::string& key, bool fallback) const
{
    const auto v = find(key);
    if(!v) return fallback;
    if(*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if(*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw format_error(origin_, "key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<double> KeyValues::get_list(const std::string& key) const
{
    std::vector<double> out;
    const auto v = find(key);
    if(!v) return out;
    std::string item;
    std::istringstream ss(*v);
    while(std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if(!t.empty()) out.push_back(parse_number<double>(t, origin_, key));
    }
    return out;
}

void KeyValues::check_known(const std::vector<std::string>& known) const
{
    for(const auto& [k, v] : entries_) {
        const bool ok = std::any_of(known.begin(), known.end(), [&](const std::string& n) {
            return n == k || (!n.empty() && n.back() == '.' && k.rfind(n, 0) == 0);
        });
        if(!ok) throw format_error(origin_, "unknown key '" + k + "'");
    }
}

std::string KeyValues::str() const
{
    std::string out;
    for(const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
}

// ---- events ----

void write_events(const std::string& path, const EventStream& stream)
{
    if(stream.width < 0 || stream.width > 65535 || stream.height < 0 || stream.height > 65535)
        throw IoError(IoError::Kind::out_of_bounds, path, "raster does not fit u16");
    std::string out;
    out.reserve(16 + stream.events.size() * 13);
    out += "EVF1";
    put_le(out, static_cast<std::uint16_t>(stream.width));
    put_le(out, static_cast<std::uint16_t>(stream.height));
    put_le(out, static_cast<std::uint64_t>(stream.events.size()));
    for(const Event& e : stream.events) {
        put_le(out, e.x);
        put_le(out, e.y);
        put_le(out, e.t);
        put_le(out, e.p);
    }
    atomic_write(path, out);
}

EventStream read_events(const std::string& path)
{
    const std::string bytes = read_file(path);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if(bytes.size() < 4 || std::memcmp(p, "EVF1", 4) != 0) throw IoError(IoError::Kind::bad_magic, path, "not an EVF1 event file");
    if(bytes.size() < 16) throw IoError(IoError::Kind::truncated, path, "header truncated");
    EventStream s;
    s.width = get_le<std::uint16_t>(p + 4);
    s.height = get_le<std::uint16_t>(p + 6);
    const std::uint64_t count = get_le<std::uint64_t>(p + 8);
    const std::uint64_t payload = bytes.size() - 16;
    if(count > payload / 13)
        throw IoError(IoError::Kind::truncated, path,
                      "header announces " + std::to_string(count) + " events, file holds " + std::to_string(payload / 13));
    if(payload != count * 13) throw IoError(IoError::Kind::format, path, "trailing bytes after the last event");
    s.events.resize(count);
    const unsigned char* r = p + 16;
    for(std::uint64_t i = 0; i < count; ++i, r += 13) {
        Event& e = s.events[i];
        e.x = get_le<std::uint16_t>(r);
        e.y = get_le<std::uint16_t>(r + 2);
        e.t = get_le<std::int64_t>(r + 4);
        e.p = get_le<std::int8_t>(r + 12);
        if(e.x >= s.width || e.y >= s.height)
            throw IoError(IoError::Kind::out_of_bounds, path, "event " + std::to_string(i) + " outside the raster");
        if(e.p != 1 && e.p != -1) throw IoError(IoError::Kind::format, path, "event " + std::to_string(i) + " has polarity " + std::to_string(e.p));
        if(i > 0 && e.t < s.events[i - 1].t)
            throw IoError(IoError::Kind::unsorted, path, "timestamps decrease at event " + std::to_string(i));
    }
    return s;
}

// ---- tensors ----

std::string sidecar_path(const std::string& path)
{
    return path + ".meta";
}

namespace {

std::vector<float> read_f32(const std::string& path, std::size_t expected)
{
    const std::string bytes = read_file(path);
    if(bytes.size() != expected * 4)
        throw format_error(path, "payload has " + std::to_string(bytes.size()) + " bytes, sidecar implies " +
                                     std::to_string(expected * 4));
    std::vector<float> out(expected);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    for(std::size_t i = 0; i < expected; ++i) out[i] = get_f32(p + 4 * i);
    return out;
}

KeyValues read_sidecar(const std::string& path, const std::string& format)
{
    const KeyValues kv = KeyValues::load(sidecar_path(path));
    if(kv.get("format", std::string()) != format)
        throw format_error(sidecar_path(path), "expected format = " + format);
    return kv;
}

int positive_dim(const KeyValues& kv, const std::string& key)
{
    const int v = kv.get(key, -1);
    if(v <= 0) throw format_error(kv.origin(), "missing or non-positive '" + key + "'");
    return v;
}

} // namespace

void write_flow(const std::string& path, const FlowMap& flow)
{
    const std::size_t n = static_cast<std::size_t>(flow.width) * flow.height;
    if(flow.values.size() != n) throw std::invalid_argument("write_flow: value count does not match dimensions");
    std::string out;
    out.reserve(n * 8);
    for(std::size_t i = 0; i < n; ++i) {
        if(!std::isfinite(flow.values[i].x) || !std::isfinite(flow.values[i].y))
            throw IoError(IoError::Kind::format, path, "flow contains non-finite values; mark them in the mask instead");
        put_f32(out, static_cast<float>(flow.values[i].x));
    }
    for(std::size_t i = 0; i < n; ++i) put_f32(out, static_cast<float>(flow.values[i].y));
    KeyValues kv;
    kv.set("format", "flo32");
    kv.set("layout", "u plane then v plane, float32 little endian, row major");
    kv.set("width", flow.width);
    kv.set("height", flow.height);
    kv.set("tau", flow.tau);
    kv.set("units", "px");
    if(flow.has_mask()) {
        if(flow.mask.size() != n) throw std::invalid_argument("write_flow: mask size does not match dimensions");
        const std::string mask_path = path + ".mask";
        std::string m(n, '\0');
        for(std::size_t i = 0; i < n; ++i) m[i] = flow.mask[i] ? 1 : 0;
        atomic_write(mask_path, m);
        kv.set("mask", fs::path(mask_path).filename().string());
    }
    atomic_write(path, out);
    kv.save(sidecar_path(path));
}

FlowMap read_flow(const std::string& path)
{
    const KeyValues kv = read_sidecar(path, "flo32");
    FlowMap flow(positive_dim(kv, "width"), positive_dim(kv, "height"), kv.get("tau", 1.0));
    const std::size_t n = static_cast<std::size_t>(flow.width) * flow.height;
    const std::vector<float> raw = read_f32(path, 2 * n);
    for(std::size_t i = 0; i < n; ++i) flow.values[i] = {raw[i], raw[n + i]};
    if(const auto m = kv.find("mask")) {
        const std::string mask_path = (fs::path(path).parent_path() / *m).string();
        const std::string bytes = read_file(mask_path);
        if(bytes.size() != n) throw format_error(mask_path, "mask size does not match the sidecar dimensions");
        flow.mask.resize(n);
        for(std::size_t i = 0; i < n; ++i) {
            const auto b = static_cast<unsigned char>(bytes[i]);
            if(b > 1) throw format_error(mask_path, "mask bytes must be 0 or 1");
            flow.mask[i] = b;
        }
    }
    return flow;
}

void write_voxel_grid(const std::string& path, const VoxelGrid& grid)
{
    std::string out;
    out.reserve(grid.values().size() * 4);
    for(float v : grid.values()) put_f32(out, v);
    KeyValues kv;
    kv.set("format", "voxel32");
    kv.set("layout", "bins x height x width, float32 little endian");
    kv.set("bins", grid.bins());
    kv.set("height", grid.height());
    kv.set("width", grid.width());
    kv.set("t_start_us", grid.t_start());
    kv.set("t_end_us", grid.t_end());
    std::string ts;
    for(std::size_t i = 0; i < grid.bin_timestamps().size(); ++i)
        ts += (i ? ", " : "") + format_double(grid.bin_timestamps()[i]);
    kv.set("bin_timestamps_us", ts);
    atomic_write(path, out);
    kv.save(sidecar_path(path));
}

VoxelGrid read_voxel_grid(const std::string& path)
{
    const KeyValues kv = read_sidecar(path, "voxel32");
    VoxelGrid g(positive_dim(kv, "bins"), positive_dim(kv, "height"), positive_dim(kv, "width"),
                kv.get("t_start_us", 0.0), kv.get("t_end_us", 0.0));
    const std::vector<float> raw = read_f32(path, g.values().size());
    std::copy(raw.begin(), raw.end(), g.values().begin());
    return g;
}

void write_bezier(const std::string& path, const BezierField& field)
{
    const int n = field.degree();
    const std::size_t plane = static_cast<std::size_t>(field.height()) * field.width();
    std::string out;
    out.reserve(plane * 2 * n * 4);
    for(int i = 1; i <= n; ++i)
        for(int comp = 0; comp < 2; ++comp)
            for(int y = 0; y < field.height(); ++y)
                for(int x = 0; x < field.width(); ++x) {
                    const Vec2& p = field.point(i, y, x);
                    put_f32(out, static_cast<float>(comp == 0 ? p.x : p.y));
                }
    KeyValues kv;
    kv.set("format", "bezier32");
    kv.set("layout", "degree x 2 x height x width, control points P1..Pn, P0 = 0 implicit");
    kv.set("degree", n);
    kv.set("height", field.height());
    kv.set("width", field.width());
    kv.set("units", "px");
    atomic_write(path, out);
    kv.save(sidecar_path(path));
}

BezierField read_bezier(const std::string& path)
{
    const KeyValues kv = read_sidecar(path, "bezier32");
    BezierField f(positive_dim(kv, "degree"), positive_dim(kv, "height"), positive_dim(kv, "width"));
    const std::size_t plane = static_cast<std::size_t>(f.height()) * f.width();
    const std::vector<float> raw = read_f32(path, plane * 2 * f.degree());
    std::size_t k = 0;
    for(int i = 1; i <= f.degree(); ++i)
        for(int comp = 0; comp < 2; ++comp)
            for(int y = 0; y < f.height(); ++y)
                for(int x = 0; x < f.width(); ++x) {
                    Vec2& p = f.point(i, y, x);
                    (comp == 0 ? p.x : p.y) = raw[k++];
                }
    return f;
}

// ---- images ----

bool png_supported()
{
#ifdef EVTRAJ_HAVE_PNG
    return true;
#else
    return false;
#endif
}

std::string default_image_extension()
{
    return png_supported() ? ".png" : ".ppm";
}

namespace {

unsigned char quantize(float v)
{
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

std::vector<unsigned char> interleave(const Image& img, int channels)
{
    const int W = img.width();
    const int H = img.height();
    std::vector<unsigned char> buf(static_cast<std::size_t>(W) * H * channels);
    for(int y = 0; y < H; ++y)
        for(int x = 0; x < W; ++x)
            for(int c = 0; c < channels; ++c)
                buf[(static_cast<std::size_t>(y) * W + x) * channels + c] = quantize(img.at(c, y, x));
    return buf;
}

Image deinterleave(const unsigned char* buf, int W, int H, int channels)
{
    Image img(W, H, channels);
    for(int y = 0; y < H; ++y)
        for(int x = 0; x < W; ++x)
            for(int c = 0; c < channels; ++c)
                img.at(c, y, x) = buf[(static_cast<std::size_t>(y) * W + x) * channels + c] / 255.0f;
    return img;
}

void write_pnm(const std::string& path, const Image& img)
{
    const int ch = img.channels() == 1 ? 1 : 3;
    std::string out = (ch == 1 ? "P5\n" : "P6\n") + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    const auto buf = interleave(img, ch);
    out.append(reinterpret_cast<const char*>(buf.data()), buf.size());
    atomic_write(path, out);
}

Image read_pnm(const std::string& path)
{
    const std::string bytes = read_file(path);
    std::istringstream ss(bytes);
    std::string magic;
    int W = 0, H = 0, maxval = 0;
    ss >> magic;
    if(magic != "P5" && magic != "P6") throw IoError(IoError::Kind::bad_magic, path, "not a binary PGM/PPM");
    auto next_int = [&](int& v) {
        ss >> std::ws;
        while(ss.peek() == '#') {
            std::string skip;
            std::getline(ss, skip);
            ss >> std::ws;
        }
        ss >> v;
    };
    next_int(W);
    next_int(H);
    next_int(maxval);
    if(!ss || W <= 0 || H <= 0 || maxval != 255) throw format_error(path, "unsupported PNM header (8-bit only)");
    ss.get();
    const int ch = magic == "P5" ? 1 : 3;
    const std::size_t offset = static_cast<std::size_t>(ss.tellg());
    const std::size_t need = static_cast<std::size_t>(W) * H * ch;
    if(bytes.size() < offset + need) throw IoError(IoError::Kind::truncated, path, "pixel data truncated");
    return deinterleave(reinterpret_cast<const unsigned char*>(bytes.data()) + offset, W, H, ch);
}

} // namespace

void write_image(const std::string& path, const Image& image)
{
    if(image.empty()) throw std::invalid_argument("write_image: empty image");
    if(image.channels() != 1 && image.channels() != 3 && image.channels() != 4)
        throw std::invalid_argument("write_image: 1, 3 or 4 channels expected");
    const std::string ext = extension(path);
    if(ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return write_pnm(path, image);
    if(ext != ".png") throw format_error(path, "unknown image extension (use .png, .pgm or .ppm)");
#ifdef EVTRAJ_HAVE_PNG
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width());
    png.height = static_cast<png_uint_32>(image.height());
    png.format = image.channels() == 1 ? PNG_FORMAT_GRAY : image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA;
    const auto buf = interleave(image, image.channels());
    png_alloc_size_t size = 0;
    if(!png_image_write_to_memory(&png, nullptr, &size, 0, buf.data(), 0, nullptr))
        throw IoError(IoError::Kind::write_failed, path, std::string("libpng: ") + png.message);
    std::string out(size, '\0');
    if(!png_image_write_to_memory(&png, out.data(), &size, 0, buf.data(), 0, nullptr))
        throw IoError(IoError::Kind::write_failed, path, std::string("libpng: ") + png.message);
    out.resize(size);
    atomic_write(path, out);
#else
    throw format_error(path, "built without libpng; write .ppm/.pgm instead");
#endif
}

Image read_image(const std::string& path)
{
    const std::string ext = extension(path);
    if(ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
    if(ext != ".png") throw format_error(path, "unknown image extension");
#ifdef EVTRAJ_HAVE_PNG
    const std::string bytes = read_file(path);
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    if(!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
        throw IoError(IoError::Kind::bad_magic, path, std::string("libpng: ") + png.message);
    const bool alpha = (png.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
    const int ch = alpha ? 4 : color ? 3 : 1;
    png.format = ch == 4 ? PNG_FORMAT_RGBA : ch == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
    if(!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr))
        throw IoError(IoError::Kind::format, path, std::string("libpng: ") + png.message);
    return deinterleave(buf.data(), static_cast<int>(png.width), static_cast<int>(png.height), ch);
#else
    throw format_error(path, "built without libpng");
#endif
}

Image colorize_flow(const FlowMap& flow, std::optional<double> max_magnitude)
{
    Image rgb(flow.width, flow.height, 3, 1.0f);
    double vmax = 0.0;
    if(max_magnitude) {
        vmax = *max_magnitude;
    } else {
        for(int y = 0; y < flow.height; ++y)
            for(int x = 0; x < flow.width; ++x)
                if(flow.valid(y, x)) vmax = std::max(vmax, flow.at(y, x).norm());
    }
    if(!(vmax > 0.0)) return rgb;
    for(int y = 0; y < flow.height; ++y)
        for(int x = 0; x < flow.width; ++x) {
            if(!flow.valid(y, x)) {
                for(int c = 0; c < 3; ++c) rgb.at(c, y, x) = 0.0f;
                continue;
            }
            const Vec2 f = flow.at(y, x);
            const double mag = f.norm();
            if(mag == 0.0) continue;
            double hue = std::atan2(f.y, f.x) * 180.0 / std::numbers::pi;
            if(hue < 0.0) hue += 360.0;
            const double s = std::min(1.0, mag / vmax);
            // HSV with V = 1.
            const double h6 = hue / 60.0;
            const int sector = static_cast<int>(h6) % 6;
            const double frac = h6 - std::floor(h6);
            const double p = 1.0 - s;
            const double q = 1.0 - s * frac;
            const double t = 1.0 - s * (1.0 - frac);
            double r = 1, g = 1, b = 1;
            switch(sector) {
            case 0: r = 1, g = t, b = p; break;
            case 1: r = q, g = 1, b = p; break;
            case 2: r = p, g = 1, b = t; break;
            case 3: r = p, g = q, b = 1; break;
            case 4: r = t, g = p, b = 1; break;
            default: r = 1, g = p, b = q; break;
            }
            rgb.at(0, y, x) = static_cast<float>(r);
            rgb.at(1, y, x) = static_cast<float>(g);
            rgb.at(2, y, x) = static_cast<float>(b);
        }
    return rgb;
}

void draw_line(Image& rgb, Vec2 a, Vec2 b, const float color[3])
{
    int x0 = static_cast<int>(std::lround(a.x)), y0 = static_cast<int>(std::lround(a.y));
    const int x1 = static_cast<int>(std::lround(b.x)), y1 = static_cast<int>(std::lround(b.y));
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    // Bound the walk so a wild prediction cannot stall rendering.
    for(int guard = 0; guard < 1 << 16; ++guard) {
        if(x0 >= 0 && y0 >= 0 && x0 < rgb.width() && y0 < rgb.height())
            for(int c = 0; c < 3; ++c) rgb.at(c, y0, x0) = color[c];
        if(x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if(e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if(e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

} // namespace evtraj
