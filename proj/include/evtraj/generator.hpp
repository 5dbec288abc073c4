#pragma once

#include "evtraj/event_representation.hpp"
#include "evtraj/event_simulator.hpp"
#include "evtraj/io.hpp"
#include "evtraj/motion.hpp"
#include "evtraj/scene.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace evtraj {

struct GeneratorConfig
{
    int width = 128;
    int height = 128;
    double fps = 250.0;
    double duration = 1.0;
    double t_ref = 0.4;
    double gt_end = 0.9;
    double gt_step = 0.01;
    int sprites_min = 1;
    int sprites_max = 3;
    double sprite_size_min = 0.25; // fraction of the shorter canvas side
    double sprite_size_max = 0.45;
    double background_margin = 1.5; // procedural background size relative to the canvas
    double contrast_threshold = 0.2;
    double threshold_sigma = 0.0;
    bool write_stack = false;
    std::string background_dir; // empty: procedural textures
    std::string sprite_dir;      // empty: procedural sprites
    LayerMotionParams background = default_background_motion();
    LayerMotionParams foreground = default_foreground_motion();

    void validate() const;
    /// Keys mirror the fields; motion rows are `bg.translation.beta`, `fg.scale.theta`, ...
    static GeneratorConfig from_key_values(const KeyValues& kv);
    KeyValues to_key_values() const;

    /// Normalized τ of the ground-truth grid: k·gt_step / (gt_end − t_ref).
    std::vector<double> gt_taus() const;
};

struct Sequence
{
    std::uint64_t seed = 0;
    SceneSpec scene;
    std::vector<SimilarityTrajectory> trajectories; // background first, then sprites
    std::vector<double> frame_times;
    std::vector<Image> frames; // grayscale, one per frame time
    Image frame_ref;           // RGB at t_ref
    Image frame_target;        // RGB at gt_end
    EventStream events;
    GroundTruth gt;
    KeyValues manifest;
};

/// Scene with procedural or directory-sourced assets and sampled trajectories.
SceneSpec make_scene(const GeneratorConfig& config,
                     std::uint64_t seed,
                     std::vector<SimilarityTrajectory>* trajectories = nullptr);

/// Renders frames, simulates events, computes ground truth. Deterministic per seed.
Sequence render_sequence(const GeneratorConfig& config, std::uint64_t seed, Exec exec = Exec::parallel);

/// Writes `dir` = frames/, events.evf, gt/flow_<ms>.flo32, manifest.txt.
void write_sequence(const Sequence& seq, const GeneratorConfig& config, const std::string& dir);

/// render_sequence + write_sequence into `<out_root>/seq_<seed>`; returns that path.
std::string generate_sequence(const GeneratorConfig& config,
                              std::uint64_t seed,
                              const std::string& out_root,
                              Exec exec = Exec::parallel);

/// Ground-truth file name for a time offset from t_ref in milliseconds.
std::string gt_file_name(int offset_ms);

} // namespace evtraj
