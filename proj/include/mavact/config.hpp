#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>

#include "mavact/backbone.hpp"
#include "mavact/synthgen.hpp"
#include "mavact/trainer.hpp"

namespace mavact::cli {

inline constexpr const char* kToolVersion = "0.3.0";

struct DataSection {
    std::string path = "data.h5";  // relative paths resolve against the output directory
    int per_class = 100;
    ScaleTag scale = ScaleTag::kShort;
    std::uint64_t seed = 0;
    double jitter = 1.0;
    int frames = 16;
    int height = 128;
    int width = 128;
    int fps = 30;
    double noise_std = 10.0 / 255.0;
    std::int64_t split_num = 3;
    std::int64_t split_den = 4;
    std::uint64_t split_seed = 0;

    SplitSpec split() const { return {split_num, split_den, split_seed}; }
    synth::DatasetSpec dataset_spec() const;
};

struct BenchSection {
    std::string device = "cpu";  // accelerator timing target; "cpu" skips it
    int reps = 20;
    int warmup = 3;
};

/// Fully resolved run configuration. Backbone input sizes are derived:
/// (crop_frames, data.height, data.width).
struct RunConfig {
    DataSection data;
    nn::BackboneConfig teacher = nn::BackboneConfig::teacher_default();
    nn::BackboneConfig student = nn::BackboneConfig::student_default();
    train::TrainConfig train;  // train.weights is the `loss` section
    int crop_frames = 12;
    BenchSection bench;

    /// Fills derived backbone input sizes and checks cross-section constraints.
    void resolve();
};

/// Parses a JSON document; an empty or whitespace-only text yields all
/// defaults. Unknown keys, type mismatches and constraint violations throw
/// ConfigError naming the dotted key.
RunConfig parse_config_text(const std::string& text);
/// Throws IoError if the file cannot be read.
RunConfig parse_config(const std::string& path);

nlohmann::json to_json(const RunConfig& cfg);
std::string serialize(const RunConfig& cfg);

nlohmann::json to_json(const nn::BackboneConfig& cfg);

std::string stage_name(int stage);
int stage_index(const std::string& name);

}  // namespace mavact::cli
