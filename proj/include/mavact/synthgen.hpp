#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mavact/datamodel.hpp"

namespace mavact::synth {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct TrajectorySpec {
    ActionLabel action = ActionLabel::kStart;
    ScaleTag scale = ScaleTag::kShort;
    std::uint64_t seed = 0;
    double jitter = 1.0;  // std of Gaussian positional noise, pixels
};

/// Frame geometry and appearance. Blob radius shrinks with camera distance.
struct RenderParams {
    int height = 128;
    int width = 128;
    int frames = 16;
    int radius_short = 8;
    int radius_medium = 5;
    int radius_long = 3;
    double noise_std = 10.0 / 255.0;  // background noise, in [0,1] intensity units
    std::uint8_t background = 64;
    std::uint8_t foreground = 230;

    /// Radii scaled from the 128-pixel defaults to the given frame size.
    static RenderParams for_frame(int height, int width, int frames);
    int radius(ScaleTag s) const;
    /// Throws std::invalid_argument unless radii are >= 1 and strictly decreasing.
    void validate() const;
};

/// Motion primitive per action:
///   START  clockwise circle (image coordinates, y down)
///   END    counter-clockwise circle
///   ONE    vertical oscillation
///   ZERO   horizontal oscillation
/// One full cycle over T frames, so circles close on themselves. Centre, radius
/// and phase are drawn from `spec.seed`; positions are clamped to the frame.
std::vector<Point> gen_trajectory(const TrajectorySpec& spec, int frames, int height = 128,
                                  int width = 128);

/// Noisy flat background plus a bright disc at each trajectory position.
LabeledClip render_clip(std::span<const Point> trajectory, const RenderParams& params,
                        ActionLabel label, ScaleTag scale, std::uint64_t noise_seed = 0);

struct DatasetSpec {
    int per_class = 100;
    ScaleTag scale = ScaleTag::kShort;
    std::uint64_t seed = 0;
    double jitter = 1.0;
    int fps = 30;
    RenderParams render;
};

/// Balanced dataset of 4 * per_class clips, labels interleaved 0,1,2,3,0,...
ClipDataset generate_dataset(const DatasetSpec& spec);
/// generate_dataset + write_dataset. Throws IoError when `path` is unwritable.
ClipDataset gen_dataset(const DatasetSpec& spec, const std::string& path);

}  // namespace mavact::synth
