#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mavact {

inline constexpr int kNumActions = 4;

/// The four MAV motion symbols. Underlying values are the on-disk wire codes.
enum class ActionLabel : std::uint8_t { kStart = 0, kEnd = 1, kOne = 2, kZero = 3 };

/// Camera distance class (nominally 1 m / 1.5 m / 2 m).
enum class ScaleTag : std::uint8_t { kShort = 0, kMedium = 1, kLong = 2 };

inline constexpr std::array<ActionLabel, kNumActions> kAllActions = {
    ActionLabel::kStart, ActionLabel::kEnd, ActionLabel::kOne, ActionLabel::kZero};

constexpr std::uint8_t wire_code(ActionLabel a) { return static_cast<std::uint8_t>(a); }
/// Throws std::invalid_argument for codes outside 0..3.
ActionLabel action_from_code(std::uint8_t code);
std::string_view to_string(ActionLabel a);
/// Streams the lower-case name, e.g. for test diagnostics.
inline std::ostream& operator<<(std::ostream& os, ActionLabel a) { return os << to_string(a); }

std::string_view to_string(ScaleTag s);
/// Accepts "short", "medium", "long".
ScaleTag scale_from_string(std::string_view s);

/// (T, H, W) of a clip; every clip in a dataset shares it.
struct ClipShape {
    int frames = 16;
    int height = 128;
    int width = 128;

    std::size_t voxels() const {
        return static_cast<std::size_t>(frames) * height * width * 3;
    }
    bool operator==(const ClipShape&) const = default;
};

/// One (T, H, W, 3) uint8 video with its action and scale.
struct LabeledClip {
    ClipShape shape;
    std::vector<std::uint8_t> frames;
    ActionLabel label = ActionLabel::kStart;
    ScaleTag scale = ScaleTag::kShort;

    std::uint8_t at(int t, int y, int x, int c) const {
        return frames[((static_cast<std::size_t>(t) * shape.height + y) * shape.width + x) * 3 + c];
    }
};

/// In-memory mirror of the HDF5 dataset layout: "/clips" (N,T,H,W,3) uint8,
/// "/labels" (N,) uint8, attributes "scale" and "fps".
struct ClipDataset {
    ClipShape shape;
    std::vector<std::uint8_t> pixels;
    std::vector<ActionLabel> labels;
    ScaleTag scale = ScaleTag::kShort;
    int fps = 30;

    std::size_t size() const { return labels.size(); }
    std::span<const std::uint8_t> clip(std::size_t i) const {
        return {pixels.data() + i * shape.voxels(), shape.voxels()};
    }
    /// Throws std::invalid_argument if the clip shape differs from the dataset's.
    void append(const LabeledClip& c);
    LabeledClip get(std::size_t i) const;
    std::array<std::size_t, kNumActions> label_histogram() const;
};

/// Train fraction as a rational num/den, plus the shuffle seed.
struct SplitSpec {
    std::int64_t num = 3;
    std::int64_t den = 4;
    std::uint64_t seed = 0;

    double fraction() const { return static_cast<double>(num) / static_cast<double>(den); }
    void validate() const;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Label-stratified, seeded split of indices 0..N-1. |train| = round(f*N);
/// each class gets floor or ceil of f*n_c training samples.
Split split_dataset(std::span<const ActionLabel> labels, const SplitSpec& spec);
Split split_dataset(const ClipDataset& data, const SplitSpec& spec);

struct TrialReport {
    std::vector<double> accuracies;
    double mean = 0.0;
    double std = 0.0;  // population
    std::vector<std::string> errors;  // one entry per aborted trial
};

TrialReport summarize_trials(std::span<const double> accuracies);

/// Writes the normative layout. Throws IoError when the file cannot be created.
void write_dataset(const std::string& path, const ClipDataset& data);
/// Throws IoError for missing/malformed files.
ClipDataset read_dataset(const std::string& path);

}  // namespace mavact
