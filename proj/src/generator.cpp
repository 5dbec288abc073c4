#include "evtraj/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

namespace evtraj {

namespace fs = std::filesystem;

namespace {

const char* const component_names[3] = {"translation", "rotation", "scale"};

MotionParams& component(LayerMotionParams& p, int i)
{
    return i == 0 ? p.translation : i == 1 ? p.rotation : p.scale;
}

const MotionParams& component(const LayerMotionParams& p, int i)
{
    return i == 0 ? p.translation : i == 1 ? p.rotation : p.scale;
}

void read_layer(const KeyValues& kv, const std::string& prefix, LayerMotionParams& p)
{
    p.alpha = kv.get(prefix + ".alpha", p.alpha);
    for(int i = 0; i < 3; ++i) {
        MotionParams& m = component(p, i);
        const std::string base = prefix + "." + component_names[i];
        m.beta = kv.get(base + ".beta", m.beta);
        m.gamma = kv.get(base + ".gamma", m.gamma);
        m.theta = kv.get(base + ".theta", m.theta);
    }
}

void write_layer(KeyValues& kv, const std::string& prefix, const LayerMotionParams& p)
{
    kv.set(prefix + ".alpha", p.alpha);
    for(int i = 0; i < 3; ++i) {
        const MotionParams& m = component(p, i);
        const std::string base = prefix + "." + component_names[i];
        kv.set(base + ".beta", m.beta);
        kv.set(base + ".gamma", m.gamma);
        kv.set(base + ".theta", m.theta);
    }
}

std::vector<std::string> list_images(const std::string& dir)
{
    std::error_code ec;
    if(!fs::is_directory(dir, ec)) throw IoError(IoError::Kind::open_failed, dir, "asset directory does not exist");
    std::vector<std::string> files;
    for(const auto& entry : fs::directory_iterator(dir)) {
        if(!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if(ext == ".png" || ext == ".ppm" || ext == ".pgm") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if(files.empty()) throw IoError(IoError::Kind::open_failed, dir, "no .png/.ppm/.pgm assets found");
    return files;
}

Image as_rgb(Image img)
{
    if(img.channels() >= 3) return img;
    Image rgb(img.width(), img.height(), 3);
    for(int c = 0; c < 3; ++c) std::copy(img.plane(0).begin(), img.plane(0).end(), rgb.plane(c).begin());
    return rgb;
}

std::string join(const std::vector<double>& v)
{
    std::string s;
    for(std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s;
}

} // namespace

std::string gt_file_name(int offset_ms)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "flow_%04d.flo32", offset_ms);
    return buf;
}

void GeneratorConfig::validate() const
{
    if(width <= 0 || height <= 0 || width > 65535 || height > 65535)
        throw std::invalid_argument("generator: canvas size must be within 1..65535");
    if(!(fps > 0.0)) throw std::invalid_argument("generator: fps must be > 0");
    if(!(duration > 0.0)) throw std::invalid_argument("generator: duration must be > 0");
    if(!(t_ref >= 0.0 && t_ref < gt_end && gt_end <= duration))
        throw std::invalid_argument("generator: need 0 <= t_ref < gt_end <= duration");
    if(!(gt_step > 0.0)) throw std::invalid_argument("generator: gt_step must be > 0");
    if(sprites_min < 0 || sprites_max < sprites_min) throw std::invalid_argument("generator: bad sprite count range");
    if(!(sprite_size_min > 0.0 && sprite_size_max >= sprite_size_min))
        throw std::invalid_argument("generator: bad sprite size range");
    if(!(background_margin >= 1.0)) throw std::invalid_argument("generator: background_margin must be >= 1");
    if(!(contrast_threshold > 0.0)) throw std::invalid_argument("generator: contrast_threshold must be > 0");
    if(!(threshold_sigma >= 0.0)) throw std::invalid_argument("generator: threshold_sigma must be >= 0");
    background.validate();
    foreground.validate();
}

GeneratorConfig GeneratorConfig::from_key_values(const KeyValues& kv)
{
    kv.check_known({"width", "height", "fps", "duration", "t_ref", "gt_end", "gt_step", "sprites_min", "sprites_max",
                    "sprite_size_min", "sprite_size_max", "background_margin", "contrast_threshold",
                    "threshold_sigma", "write_stack", "background_dir", "sprite_dir", "bg.", "fg."});
    GeneratorConfig c;
    c.width = kv.get("width", c.width);
    c.height = kv.get("height", c.height);
    c.fps = kv.get("fps", c.fps);
    c.duration = kv.get("duration", c.duration);
    c.t_ref = kv.get("t_ref", c.t_ref);
    c.gt_end = kv.get("gt_end", c.gt_end);
    c.gt_step = kv.get("gt_step", c.gt_step);
    c.sprites_min = kv.get("sprites_min", c.sprites_min);
    c.sprites_max = kv.get("sprites_max", c.sprites_max);
    c.sprite_size_min = kv.get("sprite_size_min", c.sprite_size_min);
    c.sprite_size_max = kv.get("sprite_size_max", c.sprite_size_max);
    c.background_margin = kv.get("background_margin", c.background_margin);
    c.contrast_threshold = kv.get("contrast_threshold", c.contrast_threshold);
    c.threshold_sigma = kv.get("threshold_sigma", c.threshold_sigma);
    c.write_stack = kv.get("write_stack", c.write_stack);
    c.background_dir = kv.get("background_dir", c.background_dir);
    c.sprite_dir = kv.get("sprite_dir", c.sprite_dir);
    read_layer(kv, "bg", c.background);
    read_layer(kv, "fg", c.foreground);
    try {
        c.validate();
    } catch(const std::invalid_argument& e) {
        throw IoError(IoError::Kind::format, kv.origin(), e.what());
    }
    return c;
}

KeyValues GeneratorConfig::to_key_values() const
{
    KeyValues kv;
    kv.set("width", width);
    kv.set("height", height);
    kv.set("fps", fps);
    kv.set("duration", duration);
    kv.set("t_ref", t_ref);
    kv.set("gt_end", gt_end);
    kv.set("gt_step", gt_step);
    kv.set("sprites_min", sprites_min);
    kv.set("sprites_max", sprites_max);
    kv.set("sprite_size_min", sprite_size_min);
    kv.set("sprite_size_max", sprite_size_max);
    kv.set("background_margin", background_margin);
    kv.set("contrast_threshold", contrast_threshold);
    kv.set("threshold_sigma", threshold_sigma);
    kv.set("write_stack", write_stack);
    kv.set("background_dir", background_dir);
    kv.set("sprite_dir", sprite_dir);
    write_layer(kv, "bg", background);
    write_layer(kv, "fg", foreground);
    return kv;
}

std::vector<double> GeneratorConfig::gt_taus() const
{
    std::vector<double> taus;
    const double span = gt_end - t_ref;
    const int steps = static_cast<int>(std::floor(span / gt_step + 1e-9));
    // Rounded to 1e-12 so the grid prints cleanly.
    for(int k = 0; k <= steps; ++k) taus.push_back(std::min(1.0, std::round(k * gt_step / span * 1e12) / 1e12));
    return taus;
}

SceneSpec make_scene(const GeneratorConfig& config, std::uint64_t seed, std::vector<SimilarityTrajectory>* trajectories)
{
    config.validate();
    SceneSpec scene;
    scene.width = config.width;
    scene.height = config.height;
    scene.duration = config.duration;
    scene.t_ref = config.t_ref;
    scene.fps = config.fps;
    scene.seed = seed;

    Rng layout(split_seed(seed, 0));
    const Vec2 canvas_center{(config.width - 1) * 0.5, (config.height - 1) * 0.5};
    const int bw = static_cast<int>(std::ceil(config.width * config.background_margin));
    const int bh = static_cast<int>(std::ceil(config.height * config.background_margin));

    std::vector<std::string> bg_files, sprite_files;
    if(!config.background_dir.empty()) bg_files = list_images(config.background_dir);
    if(!config.sprite_dir.empty()) sprite_files = list_images(config.sprite_dir);

    Image bg_tex;
    if(bg_files.empty()) {
        bg_tex = procedural_texture(split_seed(seed, 1), bw, bh, 6.0);
    } else {
        const std::string& f = bg_files[static_cast<std::size_t>(layout.uniform_int(0, static_cast<int>(bg_files.size()) - 1))];
        bg_tex = resize_bilinear(as_rgb(read_image(f)), bw, bh);
        if(bg_tex.channels() == 4) {
            Image rgb(bw, bh, 3);
            for(int c = 0; c < 3; ++c) std::copy(bg_tex.plane(c).begin(), bg_tex.plane(c).end(), rgb.plane(c).begin());
            bg_tex = std::move(rgb);
        }
    }

    std::vector<SimilarityTrajectory> trajs;
    Rng bg_rng(split_seed(seed, 2));
    trajs.push_back(sample_trajectory(bg_rng, config.background));
    scene.background = Layer{std::move(bg_tex), canvas_center, nullptr};

    const int count = layout.uniform_int(config.sprites_min, config.sprites_max);
    const int side = std::min(config.width, config.height);
    for(int i = 0; i < count; ++i) {
        const int size = std::max(4, static_cast<int>(std::lround(side * layout.uniform(config.sprite_size_min, config.sprite_size_max))));
        Image tex;
        if(sprite_files.empty()) {
            tex = procedural_sprite(split_seed(seed, 100 + i), size, size);
        } else {
            const std::string& f =
                sprite_files[static_cast<std::size_t>(layout.uniform_int(0, static_cast<int>(sprite_files.size()) - 1))];
            Image src = read_image(f);
            if(src.channels() < 3) src = as_rgb(std::move(src));
            const double k = static_cast<double>(size) / std::max(src.width(), src.height());
            tex = resize_bilinear(src, std::max(2, static_cast<int>(std::lround(src.width() * k))),
                                  std::max(2, static_cast<int>(std::lround(src.height() * k))));
        }
        const Vec2 anchor{layout.uniform(0.15, 0.85) * (config.width - 1), layout.uniform(0.15, 0.85) * (config.height - 1)};
        Rng fg_rng(split_seed(seed, 200 + i));
        trajs.push_back(sample_trajectory(fg_rng, config.foreground));
        scene.sprites.push_back(Layer{std::move(tex), anchor, nullptr});
    }

    // Control times are fractions of the sequence duration.
    const double d = config.duration;
    scene.background.motion = [t = trajs[0], d](double s) { return t(std::clamp(s / d, 0.0, 1.0)); };
    for(std::size_t i = 0; i < scene.sprites.size(); ++i)
        scene.sprites[i].motion = [t = trajs[i + 1], d](double s) { return t(std::clamp(s / d, 0.0, 1.0)); };
    if(trajectories) *trajectories = std::move(trajs);
    return scene;
}

Sequence render_sequence(const GeneratorConfig& config, std::uint64_t seed, Exec exec)
{
    Sequence seq;
    seq.seed = seed;
    seq.scene = make_scene(config, seed, &seq.trajectories);

    const int frame_count = static_cast<int>(std::floor(config.duration * config.fps + 1e-9)) + 1;
    seq.frame_times.resize(frame_count);
    // Spline times live in [0, 1]; the last frame is pinned so rounding never leaves the range.
    for(int k = 0; k < frame_count; ++k) seq.frame_times[k] = std::min(config.duration, k / config.fps);
    seq.frames.reserve(frame_count);
    for(double t : seq.frame_times) seq.frames.push_back(compose_frame(seq.scene, t, exec).gray);
    seq.frame_ref = compose_frame(seq.scene, config.t_ref, exec).rgb;
    seq.frame_target = compose_frame(seq.scene, config.gt_end, exec).rgb;

    EventSimConfig sim;
    sim.contrast_threshold = config.contrast_threshold;
    sim.threshold_sigma = config.threshold_sigma;
    sim.seed = split_seed(seed, 3);
    seq.events = simulate_events(seq.frames, seq.frame_times, sim, exec);

    const std::vector<double> taus = config.gt_taus();
    seq.gt = render_gt_trajectories(seq.scene, config.t_ref, config.gt_end, taus, exec);

    KeyValues& m = seq.manifest;
    m.set("schema", "evtraj-sequence-1");
    m.set("seed", seed);
    m.set("width", config.width);
    m.set("height", config.height);
    m.set("duration_s", config.duration);
    m.set("t_ref_s", config.t_ref);
    m.set("t_target_s", config.gt_end);
    m.set("fps", config.fps);
    m.set("frame_count", frame_count);
    m.set("composition", "x = anchor + T + R(rotation_deg) * scale * (u - texture_center)");
    m.set("events.file", "events.evf");
    m.set("events.count", static_cast<std::uint64_t>(seq.events.events.size()));
    m.set("events.contrast_threshold", config.contrast_threshold);
    m.set("gt.count", static_cast<int>(taus.size()));
    m.set("gt.step_ms", static_cast<int>(std::lround(config.gt_step * 1000.0)));
    m.set("gt.taus", join(taus));
    const std::string ext = default_image_extension();
    m.set("frames.ref", "frames/frame_ref" + ext);
    m.set("frames.target", "frames/frame_target" + ext);
    m.set("frames.stack", config.write_stack);
    m.set("layers", static_cast<int>(seq.trajectories.size()));
    for(std::size_t i = 0; i < seq.trajectories.size(); ++i) {
        const Layer& l = i == 0 ? seq.scene.background : seq.scene.sprites[i - 1];
        const ControlPoints& cp = seq.trajectories[i].control_points();
        const std::string p = "layer." + std::to_string(i) + ".";
        m.set(p + "kind", i == 0 ? "background" : "sprite");
        m.set(p + "texture_size", std::to_string(l.texture.width()) + ", " + std::to_string(l.texture.height()));
        m.set(p + "anchor", format_double(l.anchor.x) + ", " + format_double(l.anchor.y));
        std::vector<double> tx, ty, rot, sc;
        for(const Similarity& s : cp.values) {
            tx.push_back(s.tx);
            ty.push_back(s.ty);
            rot.push_back(s.rotation);
            sc.push_back(s.scale);
        }
        m.set(p + "control_times", join(cp.times));
        m.set(p + "tx", join(tx));
        m.set(p + "ty", join(ty));
        m.set(p + "rotation_deg", join(rot));
        m.set(p + "scale", join(sc));
    }
    const KeyValues params = config.to_key_values();
    for(const auto& [k, v] : params.entries()) m.set("config." + k, v);
    return seq;
}

void write_sequence(const Sequence& seq, const GeneratorConfig& config, const std::string& dir)
{
    const std::string ext = default_image_extension();
    write_image(dir + "/frames/frame_ref" + ext, seq.frame_ref);
    write_image(dir + "/frames/frame_target" + ext, seq.frame_target);
    if(config.write_stack) {
        char name[64];
        for(std::size_t k = 0; k < seq.frames.size(); ++k) {
            std::snprintf(name, sizeof name, "/frames/stack_%05zu", k);
            write_image(dir + name + (png_supported() ? ".png" : ".pgm"), seq.frames[k]);
        }
    }
    write_events(dir + "/events.evf", seq.events);
    for(const FlowMap& f : seq.gt.flows) {
        const int ms = static_cast<int>(std::lround(f.tau * (config.gt_end - config.t_ref) * 1000.0));
        write_flow(dir + "/gt/" + gt_file_name(ms), f);
    }
    seq.manifest.save(dir + "/manifest.txt");
}

std::string generate_sequence(const GeneratorConfig& config, std::uint64_t seed, const std::string& out_root, Exec exec)
{
    const std::string dir = (fs::path(out_root) / ("seq_" + std::to_string(seed))).string();
    const Sequence seq = render_sequence(config, seed, exec);
    write_sequence(seq, config, dir);
    return dir;
}

} // namespace evtraj
