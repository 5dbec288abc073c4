#include "cli.hpp"

#include "evtraj/generator.hpp"
#include "evtraj/metrics.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace evtraj::cli {

namespace fs = std::filesystem;

namespace {

/// Raised for problems with the command line itself (exit code 1).
struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

const char* kind_name(IoError::Kind k)
{
    switch(k) {
    case IoError::Kind::open_failed: return "open_failed";
    case IoError::Kind::write_failed: return "write_failed";
    case IoError::Kind::bad_magic: return "bad_magic";
    case IoError::Kind::truncated: return "truncated";
    case IoError::Kind::unsorted: return "unsorted";
    case IoError::Kind::out_of_bounds: return "out_of_bounds";
    case IoError::Kind::format: return "format";
    }
    return "unknown";
}

struct Common
{
    int threads = 0;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--threads", c.threads, "OpenMP threads (default: $EVTRAJ_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", c.seed, "Random seed");
}

void apply_threads(const Common& c)
{
    int threads = c.threads;
    if(threads == 0)
        if(const char* env = std::getenv("EVTRAJ_THREADS")) threads = std::atoi(env);
    if(threads > 0) set_thread_count(threads);
}

void write_run_config(const std::string& dir,
                      const std::string& command,
                      const std::vector<std::string>& args,
                      const KeyValues& effective)
{
    KeyValues kv;
    kv.set("command", command);
    kv.set("argc", static_cast<int>(args.size()));
    for(std::size_t i = 0; i < args.size(); ++i) kv.set("arg." + std::to_string(i), args[i]);
    for(const auto& [k, v] : effective.entries()) kv.set("effective." + k, v);
    kv.save((fs::path(dir) / "run_config.txt").string());
}

std::vector<double> parse_list(const std::string& s)
{
    return KeyValues::parse("v = " + s, "--taus").get_list("v");
}

std::string fixed(double v, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// ---- generate ----

struct GenerateArgs
{
    Common common;
    std::string config;
    std::string out;
    int count = 1;
};

int cmd_generate(const GenerateArgs& a, const std::vector<std::string>& args, std::ostream& out)
{
    apply_threads(a.common);
    const GeneratorConfig config =
        a.config.empty() ? GeneratorConfig{} : GeneratorConfig::from_key_values(KeyValues::load(a.config));
    config.validate();
    std::vector<std::string> dirs(static_cast<std::size_t>(a.count));
    std::vector<std::string> errors(static_cast<std::size_t>(a.count));
    if(a.count == 1) {
        dirs[0] = generate_sequence(config, a.common.seed, a.out, Exec::parallel);
    } else {
        // Sequences are independent; each gets its own seed and runs its kernels serially.
#pragma omp parallel for schedule(dynamic, 1)
        for(int i = 0; i < a.count; ++i) {
            try {
                dirs[i] = generate_sequence(config, a.common.seed + static_cast<std::uint64_t>(i), a.out, Exec::serial);
            } catch(const std::exception& e) {
                errors[i] = e.what();
            }
        }
        for(const std::string& e : errors)
            if(!e.empty()) throw IoError(IoError::Kind::write_failed, a.out, e);
    }
    KeyValues eff = config.to_key_values();
    eff.set("seed", a.common.seed);
    eff.set("count", a.count);
    write_run_config(a.out, "generate", args, eff);
    for(const std::string& d : dirs) out << d << "\n";
    return ok;
}

// ---- estimate ----

struct EstimateArgs
{
    Common common;
    std::string events;
    std::vector<std::string> frames;
    std::string config;
    std::string out;
    std::string taus;
    std::optional<std::int64_t> t_ref;
    std::optional<std::int64_t> t_target;
    std::vector<int> dump_slice;
};

int cmd_estimate(const EstimateArgs& a, const std::vector<std::string>& args, std::ostream& out)
{
    apply_threads(a.common);
    KeyValues kv = a.config.empty() ? KeyValues{} : KeyValues::load(a.config);
    if(!a.frames.empty() && !kv.has("use_images")) kv.set("use_images", true);
    EstimatorConfig config = estimator_config_from(kv);
    const std::int64_t t_ref = a.t_ref.value_or(static_cast<std::int64_t>(kv.get("t_ref_us", 400000.0)));
    const std::int64_t t_target = a.t_target.value_or(static_cast<std::int64_t>(kv.get("t_target_us", 900000.0)));
    if(t_target <= t_ref) throw UsageError("--t-target must exceed --t-ref");
    std::vector<double> taus = a.taus.empty() ? kv.get_list("taus") : parse_list(a.taus);
    if(taus.empty()) taus = {0.25, 0.5, 0.75, 1.0};
    for(double t : taus)
        if(!(t >= 0.0 && t <= 1.0)) throw UsageError("--taus values must lie in [0, 1]");

    const EventStream events = read_events(a.events);
    std::optional<FramePair> frames;
    if(!a.frames.empty()) frames = FramePair{to_grayscale(read_image(a.frames[0])), to_grayscale(read_image(a.frames[1]))};

    const FlowEstimate est = estimate_flow(events, t_ref, t_target, frames, config, Exec::parallel);
    const fs::path dir(a.out);
    write_bezier((dir / "bezier.f32").string(), est.field);
    write_bezier((dir / "bezier_coarse.f32").string(), est.coarse);
    for(double tau : taus) write_flow((dir / prediction_file_name(tau)).string(), evaluate(est.field, tau));

    KeyValues report;
    report.set("feature_height", est.report.height);
    report.set("feature_width", est.report.width);
    report.set("mean_score", est.report.mean_score());
    report.set("accepted_moves", static_cast<std::uint64_t>(est.report.accepted_moves));
    report.set("no_events", est.report.no_events);
    std::size_t featureless = 0;
    for(auto f : est.report.featureless) featureless += f;
    report.set("featureless_cells", static_cast<std::uint64_t>(featureless));
    std::string trace;
    for(std::size_t i = 0; i < est.report.trace.size(); ++i) trace += (i ? ", " : "") + format_double(est.report.trace[i]);
    report.set("trace", trace);
    report.save((dir / "objective.txt").string());

    if(!a.dump_slice.empty()) {
        const CorrelationSetup setup = build_correlation_setup(events, t_ref, t_target, frames, config, Exec::parallel);
        const CorrelationVolume& vol = setup.pyramids.back().levels.front();
        const int i = a.dump_slice[0];
        const int j = a.dump_slice[1];
        if(i < 0 || j < 0 || i >= vol.height || j >= vol.width) throw UsageError("--dump-slice cell outside the feature grid");
        const auto s = vol.slice(i, j);
        const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
        Image img(vol.target_width, vol.target_height, 1);
        const float range = *hi - *lo;
        for(std::size_t k = 0; k < s.size(); ++k) img.data()[k] = range > 0.0f ? (s[k] - *lo) / range : 0.0f;
        write_image((dir / "volume_slice.pgm").string(), img);
    }

    KeyValues eff = to_key_values(config);
    eff.set("t_ref_us", static_cast<double>(t_ref));
    eff.set("t_target_us", static_cast<double>(t_target));
    std::string tl;
    for(std::size_t i = 0; i < taus.size(); ++i) tl += (i ? ", " : "") + format_double(taus[i]);
    eff.set("taus", tl);
    eff.set("seed", a.common.seed);
    write_run_config(a.out, "estimate", args, eff);
    out << "estimated " << est.field.height() << "x" << est.field.width() << " degree " << est.field.degree()
        << " field, mean J " << fixed(est.report.mean_score()) << " -> " << a.out << "\n";
    return ok;
}

// ---- evaluate ----

struct EvaluateArgs
{
    Common common;
    std::string pred;
    std::string gt;
    std::string taus;
    std::string out;
};

std::map<long long, FlowMap> load_flows(const std::string& dir)
{
    std::error_code ec;
    if(!fs::is_directory(dir, ec)) throw IoError(IoError::Kind::open_failed, dir, "not a directory");
    std::vector<fs::path> files;
    for(const auto& e : fs::directory_iterator(dir))
        if(e.is_regular_file() && e.path().extension() == ".flo32") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::map<long long, FlowMap> flows;
    for(const auto& f : files) {
        FlowMap m = read_flow(f.string());
        flows[std::llround(m.tau * 1e6)] = std::move(m);
    }
    return flows;
}

int cmd_evaluate(const EvaluateArgs& a, const std::vector<std::string>& args, std::ostream& out)
{
    apply_threads(a.common);
    const auto pred = load_flows(a.pred);
    const auto gt = load_flows(a.gt);
    std::vector<long long> keys;
    if(a.taus.empty()) {
        for(const auto& [k, v] : gt)
            if(k > 0 && pred.count(k)) keys.push_back(k);
        if(keys.empty()) throw IoError(IoError::Kind::format, a.pred, "no τ shared with the ground truth");
    } else {
        for(double t : parse_list(a.taus)) {
            const long long k = std::llround(t * 1e6);
            if(!gt.count(k)) throw IoError(IoError::Kind::open_failed, a.gt, "no ground truth at tau " + format_double(t));
            if(!pred.count(k)) throw IoError(IoError::Kind::open_failed, a.pred, "no prediction at tau " + format_double(t));
            keys.push_back(k);
        }
    }
    std::vector<FlowMap> p, g;
    for(long long k : keys) {
        p.push_back(pred.at(k));
        g.push_back(gt.at(k));
        if(p.back().width != g.back().width || p.back().height != g.back().height)
            throw IoError(IoError::Kind::format, a.pred, "prediction and ground truth differ in size");
    }
    const MetricReport r = evaluate_metrics(p, g);

    out << "tau\tepe\tae\n";
    for(std::size_t k = 0; k < r.taus.size(); ++k)
        out << fixed(r.taus[k], 4) << "\t" << fixed(r.epe_per_tau[k]) << "\t" << fixed(r.ae_per_tau[k]) << "\n";
    KeyValues kv;
    kv.set("epe", r.epe);
    kv.set("ae", r.ae);
    kv.set("npe1", r.npe1);
    kv.set("npe2", r.npe2);
    kv.set("npe3", r.npe3);
    kv.set("tepe", r.tepe);
    kv.set("tae", r.tae);
    kv.set("pixels", static_cast<std::uint64_t>(r.pixels));
    kv.set("coverage", r.coverage);
    out << "metric\tvalue\n";
    for(const auto& [k, v] : kv.entries()) out << k << "\t" << v << "\n";
    if(!a.out.empty()) {
        kv.save((fs::path(a.out) / "metrics.txt").string());
        KeyValues eff;
        eff.set("pred", a.pred);
        eff.set("gt", a.gt);
        eff.set("taus", a.taus);
        write_run_config(a.out, "evaluate", args, eff);
    }
    return ok;
}

// ---- visualize ----

struct VisualizeArgs
{
    Common common;
    std::string flow;
    std::string out;
    std::optional<double> max_magnitude;
    bool trajectories = false;
    std::string bezier;
    std::string gt;
    std::string frame;
    int stride = 16;
};

int cmd_visualize(const VisualizeArgs& a, const std::vector<std::string>& args, std::ostream& out)
{
    apply_threads(a.common);
    Image img;
    if(!a.trajectories) {
        if(a.flow.empty()) throw UsageError("visualize needs --flow, or --trajectories with --bezier");
        img = colorize_flow(read_flow(a.flow), a.max_magnitude);
    } else {
        if(a.bezier.empty()) throw UsageError("--trajectories needs --bezier <file>");
        if(a.stride < 1) throw UsageError("--stride must be >= 1");
        const BezierField field = read_bezier(a.bezier);
        if(!a.frame.empty()) {
            const Image f = read_image(a.frame);
            const Image gray = to_grayscale(f);
            img = Image(gray.width(), gray.height(), 3);
            for(int c = 0; c < 3; ++c) std::copy(gray.plane(0).begin(), gray.plane(0).end(), img.plane(c).begin());
            if(img.width() != field.width() || img.height() != field.height())
                throw IoError(IoError::Kind::format, a.frame, "frame size differs from the Bézier field");
        } else {
            img = Image(field.width(), field.height(), 3, 1.0f);
        }
        std::vector<FlowMap> gt;
        if(!a.gt.empty())
            for(auto& [k, f] : load_flows(a.gt)) gt.push_back(std::move(f));
        const float blue[3] = {0.1f, 0.2f, 1.0f};
        const float red[3] = {1.0f, 0.1f, 0.1f};
        constexpr int samples = 24;
        std::vector<std::vector<double>> w;
        for(int s = 0; s <= samples; ++s) w.push_back(bernstein_weights(field.degree(), static_cast<double>(s) / samples));
        for(int y = a.stride / 2; y < field.height(); y += a.stride)
            for(int x = a.stride / 2; x < field.width(); x += a.stride) {
                const Vec2 origin{static_cast<double>(x), static_cast<double>(y)};
                Vec2 prev = origin;
                for(const FlowMap& g : gt) {
                    if(g.width != field.width() || g.height != field.height() || !g.valid(y, x)) continue;
                    const Vec2 next = origin + g.at(y, x);
                    draw_line(img, prev, next, red);
                    prev = next;
                }
                prev = origin;
                for(int s = 1; s <= samples; ++s) {
                    const Vec2 next = origin + field.displacement(w[s], y, x);
                    draw_line(img, prev, next, blue);
                    prev = next;
                }
            }
    }
    write_image(a.out, img);
    const fs::path parent = fs::path(a.out).parent_path();
    KeyValues eff;
    eff.set("flow", a.flow);
    eff.set("bezier", a.bezier);
    eff.set("trajectories", a.trajectories);
    eff.set("stride", a.stride);
    write_run_config(parent.empty() ? "." : parent.string(), "visualize", args, eff);
    out << "wrote " << a.out << "\n";
    return ok;
}

// ---- inspect ----

struct InspectArgs
{
    Common common;
    std::string events;
};

int cmd_inspect(const InspectArgs& a, std::ostream& out)
{
    apply_threads(a.common);
    const EventStream s = read_events(a.events);
    std::size_t pos = 0;
    for(const Event& e : s.events) pos += e.p > 0;
    const std::size_t n = s.events.size();
    KeyValues kv;
    kv.set("magic", "EVF1");
    kv.set("width", s.width);
    kv.set("height", s.height);
    kv.set("count", static_cast<std::uint64_t>(n));
    if(n > 0) {
        const double t0 = static_cast<double>(s.events.front().t);
        const double t1 = static_cast<double>(s.events.back().t);
        kv.set("t_first_us", t0);
        kv.set("t_last_us", t1);
        kv.set("rate_ev_per_s", t1 > t0 ? n / ((t1 - t0) * 1e-6) : 0.0);
    }
    kv.set("positive", static_cast<std::uint64_t>(pos));
    kv.set("negative", static_cast<std::uint64_t>(n - pos));
    kv.set("polarity_balance", n ? (static_cast<double>(pos) - static_cast<double>(n - pos)) / static_cast<double>(n) : 0.0);
    out << kv.str();
    return ok;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_replay(const std::string& path, const std::string& out_override, std::ostream& out, std::ostream& err)
{
    const KeyValues kv = KeyValues::load(path);
    const int argc = kv.get("argc", -1);
    if(argc < 1) throw IoError(IoError::Kind::format, path, "missing argc");
    std::vector<std::string> args;
    for(int i = 0; i < argc; ++i) {
        const auto v = kv.find("arg." + std::to_string(i));
        if(!v) throw IoError(IoError::Kind::format, path, "missing arg." + std::to_string(i));
        args.push_back(*v);
    }
    if(!out_override.empty())
        for(std::size_t i = 0; i + 1 < args.size(); ++i)
            if(args[i] == "--out") args[i + 1] = out_override;
    return dispatch(args, out, err);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Continuous-time pixel trajectories from events: generate, estimate, evaluate, visualize, inspect"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Render synthetic sequences with trajectory ground truth");
    add_common(g, gen.common);
    g->add_option("--config", gen.config, "Generator key-value config")->check(CLI::ExistingFile);
    g->add_option("--out", gen.out, "Output root")->required();
    g->add_option("--count", gen.count, "Number of sequences")->check(CLI::PositiveNumber);

    EstimateArgs est;
    auto* e = app.add_subcommand("estimate", "Estimate a Bézier trajectory field");
    add_common(e, est.common);
    e->add_option("--events", est.events, "EVF1 event file")->required();
    e->add_option("--frames", est.frames, "Reference and target frames")->expected(2);
    e->add_option("--config", est.config, "Estimator key-value config")->check(CLI::ExistingFile);
    e->add_option("--out", est.out, "Output directory")->required();
    e->add_option("--taus", est.taus, "Comma-separated τ grid for sampled flows");
    e->add_option("--t-ref", est.t_ref, "Reference time in µs");
    e->add_option("--t-target", est.t_target, "Target time in µs");
    e->add_option("--dump-slice", est.dump_slice, "Write the target-view volume slice of cell ROW COL as PGM")->expected(2);

    EvaluateArgs ev;
    auto* v = app.add_subcommand("evaluate", "Compare predicted and ground-truth flows");
    add_common(v, ev.common);
    v->add_option("--pred", ev.pred, "Directory of predicted .flo32 files")->required();
    v->add_option("--gt", ev.gt, "Directory of ground-truth .flo32 files")->required();
    v->add_option("--taus", ev.taus, "Comma-separated τ values (default: all shared)");
    v->add_option("--out", ev.out, "Directory for metrics.txt");

    VisualizeArgs vis;
    auto* z = app.add_subcommand("visualize", "Flow colorization or trajectory overlay");
    add_common(z, vis.common);
    z->add_option("--flow", vis.flow, "Flow file to colorize");
    z->add_option("--out", vis.out, "Output image (.png, .ppm)")->required();
    z->add_option("--max", vis.max_magnitude, "Magnitude mapped to full saturation");
    z->add_flag("--trajectories", vis.trajectories, "Draw Bézier polylines (blue) and ground truth (red)");
    z->add_option("--bezier", vis.bezier, "Bézier field file");
    z->add_option("--gt", vis.gt, "Ground-truth directory");
    z->add_option("--frame", vis.frame, "Background image");
    z->add_option("--stride", vis.stride, "Pixel spacing of drawn trajectories");

    InspectArgs ins;
    auto* i = app.add_subcommand("inspect", "Event file header and statistics");
    add_common(i, ins.common);
    i->add_option("--events", ins.events, "EVF1 event file")->required();

    std::string replay_file, replay_out;
    Common replay_common;
    auto* r = app.add_subcommand("replay", "Re-run a command from its run_config.txt");
    add_common(r, replay_common);
    r->add_option("run_config", replay_file, "run_config.txt")->required();
    r->add_option("--out", replay_out, "Replace the recorded --out");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch(const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch(const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch(const CLI::ParseError& pe) {
        err << "error: kind=usage message=" << pe.what() << "\n";
        return usage;
    }

    try {
        if(*g) return cmd_generate(gen, args, out);
        if(*e) return cmd_estimate(est, args, out);
        if(*v) return cmd_evaluate(ev, args, out);
        if(*z) return cmd_visualize(vis, args, out);
        if(*i) return cmd_inspect(ins, out);
        if(*r) return cmd_replay(replay_file, replay_out, out, err);
    } catch(const UsageError& u) {
        err << "error: kind=usage message=" << u.what() << "\n";
        return usage;
    } catch(const IoError& io) {
        err << "error: kind=" << kind_name(io.kind()) << " path=" << io.path() << " message=" << io.what() << "\n";
        return data;
    } catch(const std::exception& x) {
        err << "error: kind=data message=" << x.what() << "\n";
        return data;
    }
    err << "error: kind=usage message=no command\n";
    return usage;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    try {
        return dispatch(args, out, err);
    } catch(const std::exception& x) {
        err << "error: kind=internal message=" << x.what() << "\n";
        return data;
    }
}

std::string prediction_file_name(double tau)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "flow_t%04d.flo32", static_cast<int>(std::lround(tau * 1000.0)));
    return buf;
}

EstimatorConfig estimator_config_from(const KeyValues& kv)
{
    kv.check_known({"preset", "supervision_points", "degree", "iterations", "views", "view_stride", "bins_correlation",
                    "bins_context", "radius", "levels_target", "levels_intermediate", "levels_image", "initial_step",
                    "step_decay", "smoothness", "downsample", "use_images", "subpixel", "subpixel_rounds",
                    "max_moves_per_step", "memory_budget_mb", "t_ref_us", "t_target_us", "taus", "seed"});
    const std::string preset = kv.get("preset", std::string("dsec"));
    EstimatorConfig c;
    if(preset == "multiflow")
        c = EstimatorConfig::multiflow_preset(kv.get("supervision_points", 10));
    else if(preset != "dsec")
        throw IoError(IoError::Kind::format, kv.origin(), "preset must be dsec or multiflow");
    c.degree = kv.get("degree", c.degree);
    c.iterations = kv.get("iterations", c.iterations);
    c.views = kv.get("views", c.views);
    c.view_stride = kv.get("view_stride", c.view_stride);
    c.bins_correlation = kv.get("bins_correlation", c.bins_correlation);
    c.bins_context = kv.get("bins_context", c.bins_context);
    c.radius = kv.get("radius", c.radius);
    c.levels_target = kv.get("levels_target", c.levels_target);
    c.levels_intermediate = kv.get("levels_intermediate", c.levels_intermediate);
    c.levels_image = kv.get("levels_image", c.levels_image);
    c.initial_step = kv.get("initial_step", c.initial_step);
    c.step_decay = kv.get("step_decay", c.step_decay);
    c.smoothness = kv.get("smoothness", c.smoothness);
    c.downsample = kv.get("downsample", c.downsample);
    c.use_images = kv.get("use_images", c.use_images);
    c.subpixel = kv.get("subpixel", c.subpixel);
    c.subpixel_rounds = kv.get("subpixel_rounds", c.subpixel_rounds);
    c.max_moves_per_step = kv.get("max_moves_per_step", c.max_moves_per_step);
    c.memory_budget = static_cast<std::size_t>(
        kv.get("memory_budget_mb", static_cast<double>(c.memory_budget >> 20)) * 1024.0 * 1024.0);
    try {
        c.validate();
    } catch(const std::invalid_argument& x) {
        throw IoError(IoError::Kind::format, kv.origin(), x.what());
    }
    return c;
}

KeyValues to_key_values(const EstimatorConfig& c)
{
    KeyValues kv;
    kv.set("degree", c.degree);
    kv.set("iterations", c.iterations);
    kv.set("views", c.views);
    kv.set("view_stride", c.view_stride);
    kv.set("bins_correlation", c.bins_correlation);
    kv.set("bins_context", c.bins_context);
    kv.set("radius", c.radius);
    kv.set("levels_target", c.levels_target);
    kv.set("levels_intermediate", c.levels_intermediate);
    kv.set("levels_image", c.levels_image);
    kv.set("initial_step", c.initial_step);
    kv.set("step_decay", c.step_decay);
    kv.set("smoothness", c.smoothness);
    kv.set("downsample", c.downsample);
    kv.set("use_images", c.use_images);
    kv.set("subpixel", c.subpixel);
    kv.set("subpixel_rounds", c.subpixel_rounds);
    kv.set("max_moves_per_step", c.max_moves_per_step);
    kv.set("memory_budget_mb", static_cast<double>(c.memory_budget) / (1024.0 * 1024.0));
    return kv;
}

} // namespace evtraj::cli
