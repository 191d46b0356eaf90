#include "mavact/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mavact/errors.hpp"

namespace mavact::synth {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Apparent size falls off with distance: 1 m, 1.5 m, 2 m.
double scale_factor(ScaleTag s) {
    switch (s) {
        case ScaleTag::kShort: return 1.0;
        case ScaleTag::kMedium: return 1.0 / 1.5;
        case ScaleTag::kLong: return 0.5;
    }
    return 1.0;
}

std::uint8_t to_pixel(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

RenderParams RenderParams::for_frame(int height, int width, int frames) {
    RenderParams p;
    p.height = height;
    p.width = width;
    p.frames = frames;
    const double s = std::min(height, width) / 128.0;
    p.radius_short = std::max(3, static_cast<int>(std::lround(8 * s)));
    p.radius_medium = std::max(2, std::min(p.radius_short - 1, static_cast<int>(std::lround(5 * s))));
    p.radius_long = std::max(1, std::min(p.radius_medium - 1, static_cast<int>(std::lround(3 * s))));
    return p;
}

int RenderParams::radius(ScaleTag s) const {
    switch (s) {
        case ScaleTag::kShort: return radius_short;
        case ScaleTag::kMedium: return radius_medium;
        case ScaleTag::kLong: return radius_long;
    }
    return radius_short;
}

void RenderParams::validate() const {
    if (height < 1 || width < 1 || frames < 1) {
        throw std::invalid_argument("render frame size must be positive");
    }
    if (radius_long < 1 || !(radius_short > radius_medium && radius_medium > radius_long)) {
        throw std::invalid_argument("blob radii must be >= 1 and strictly decreasing short > medium > long");
    }
    if (noise_std < 0.0) throw std::invalid_argument("noise_std must be non-negative");
}

std::vector<Point> gen_trajectory(const TrajectorySpec& spec, int frames, int height, int width) {
    if (frames < 2) throw std::invalid_argument("trajectory needs at least 2 frames");
    if (height < 1 || width < 1) throw std::invalid_argument("frame size must be positive");
    if (spec.jitter < 0.0) throw std::invalid_argument("jitter must be non-negative");

    std::mt19937_64 rng(splitmix64(spec.seed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double extent = std::min(height, width);
    const double amplitude = (0.18 + 0.10 * unit(rng)) * extent * scale_factor(spec.scale);
    const double cx = 0.5 * (width - 1) + (unit(rng) - 0.5) * 0.2 * extent;
    const double cy = 0.5 * (height - 1) + (unit(rng) - 0.5) * 0.2 * extent;
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<Point> out;
    out.reserve(frames);
    for (int t = 0; t < frames; ++t) {
        const double u = 2.0 * std::numbers::pi * t / (frames - 1);
        Point p{cx, cy};
        switch (spec.action) {
            case ActionLabel::kStart:  // clockwise on screen: y grows downward
                p.x += amplitude * std::cos(phase + u);
                p.y += amplitude * std::sin(phase + u);
                break;
            case ActionLabel::kEnd:
                p.x += amplitude * std::cos(phase - u);
                p.y += amplitude * std::sin(phase - u);
                break;
            case ActionLabel::kOne:
                p.y += amplitude * std::sin(phase + u);
                break;
            case ActionLabel::kZero:
                p.x += amplitude * std::sin(phase + u);
                break;
        }
        // noise is drawn even at jitter 0 so the stream is independent of it
        const double jx = noise(rng);
        const double jy = noise(rng);
        p.x = std::clamp(p.x + spec.jitter * jx, 0.0, width - 1.0);
        p.y = std::clamp(p.y + spec.jitter * jy, 0.0, height - 1.0);
        out.push_back(p);
    }
    return out;
}

LabeledClip render_clip(std::span<const Point> trajectory, const RenderParams& params,
                        ActionLabel label, ScaleTag scale, std::uint64_t noise_seed) {
    params.validate();
    if (trajectory.empty()) throw std::invalid_argument("empty trajectory");
    for (const auto& p : trajectory) {
        if (!(p.x >= 0.0 && p.x <= params.width - 1.0 && p.y >= 0.0 && p.y <= params.height - 1.0)) {
            throw std::invalid_argument("trajectory position outside the frame");
        }
    }

    LabeledClip clip;
    clip.shape = ClipShape{static_cast<int>(trajectory.size()), params.height, params.width};
    clip.label = label;
    clip.scale = scale;
    clip.frames.resize(clip.shape.voxels());

    std::mt19937_64 rng(splitmix64(noise_seed ^ 0x5eedf00dULL));
    std::normal_distribution<double> noise(0.0, params.noise_std * 255.0);
    const bool noisy = params.noise_std > 0.0;
    const double r = params.radius(scale);
    const double r2 = r * r;

    auto* px = clip.frames.data();
    for (std::size_t t = 0; t < trajectory.size(); ++t) {
        const auto& c = trajectory[t];
        for (int y = 0; y < params.height; ++y) {
            for (int x = 0; x < params.width; ++x) {
                const double dx = x - c.x;
                const double dy = y - c.y;
                const double base = (dx * dx + dy * dy <= r2) ? params.foreground : params.background;
                for (int ch = 0; ch < 3; ++ch) {
                    *px++ = to_pixel(noisy ? base + noise(rng) : base);
                }
            }
        }
    }
    return clip;
}

ClipDataset generate_dataset(const DatasetSpec& spec) {
    if (spec.per_class < 1) throw std::invalid_argument("per-class clip count must be >= 1");
    spec.render.validate();

    ClipDataset data;
    data.shape = ClipShape{spec.render.frames, spec.render.height, spec.render.width};
    data.scale = spec.scale;
    data.fps = spec.fps;
    data.pixels.reserve(data.shape.voxels() * 4 * spec.per_class);
    for (int i = 0; i < spec.per_class; ++i) {
        for (auto action : kAllActions) {
            const std::uint64_t clip_seed =
                splitmix64(spec.seed ^ splitmix64(static_cast<std::uint64_t>(i) * kNumActions +
                                                  wire_code(action)));
            TrajectorySpec ts{action, spec.scale, clip_seed, spec.jitter};
            auto traj = gen_trajectory(ts, spec.render.frames, spec.render.height, spec.render.width);
            data.append(render_clip(traj, spec.render, action, spec.scale, splitmix64(clip_seed)));
        }
    }
    return data;
}

ClipDataset gen_dataset(const DatasetSpec& spec, const std::string& path) {
    auto data = generate_dataset(spec);
    write_dataset(path, data);
    return data;
}

}  // namespace mavact::synth
