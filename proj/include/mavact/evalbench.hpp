#pragma once

#include <torch/torch.h>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mavact/backbone.hpp"
#include "mavact/datamodel.hpp"
#include "mavact/profile.hpp"

namespace mavact::bench {

using nn::Backbone;

using ConfusionMatrix = std::array<std::array<int64_t, kNumActions>, kNumActions>;

struct EvalReport {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    ConfusionMatrix confusion{};  // rows = true class, cols = predicted
    std::vector<std::string> warnings;
};

struct ClassCounts {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
};

/// tp/(tp+fp) and tp/(tp+fn); 0 when the denominator is 0.
double precision(const ClassCounts& c);
double recall(const ClassCounts& c);

/// Metrics from paired true/predicted class indices. Macro averages are
/// unweighted over all four classes; classes without support contribute 0 and
/// add a warning.
EvalReport evaluate_predictions(std::span<const int64_t> truth, std::span<const int64_t> predicted);

/// Argmax predictions of `model` (eval mode, no grad) over `indices` of
/// `data`, each clip centre-cropped in time to the model's input length.
EvalReport evaluate(Backbone& model, const ClipDataset& data, std::span<const std::size_t> indices,
                    int batch_size = 16);
EvalReport evaluate(Backbone& model, const ClipDataset& data);

struct MacCount {
    double macs_g = 0.0;
    double flops_g = 0.0;
    int64_t macs = 0;
};

/// MACs of one forward pass at `input_shape`; flops = 2 * macs.
MacCount count_macs(const torch::nn::Module& model, const Shape& input_shape);

inline constexpr double kPicojoulePerGigaMac = 4.6;

/// macs_g * 4.6. Throws std::invalid_argument for negative input.
double estimate_energy(double macs_g);

/// 1 / latency. Throws std::invalid_argument for latency <= 0.
double decode_rate(double cpu_latency_s);

struct LatencyStats {
    double mean_s = 0.0;
    double min_s = 0.0;
    double max_s = 0.0;
    std::vector<double> samples_s;
};

/// Wall-clock mean over `reps` batch-1 forwards after `warmup` discarded runs.
/// Host timing pins libtorch to one thread; "cuda" synchronises around each
/// call. Throws EnvironmentError for an unavailable device and
/// std::invalid_argument for reps < 1.
LatencyStats measure_latency(Backbone& model, const std::string& device, int warmup, int reps);

struct BenchmarkReport {
    std::string model;
    std::string input;  // e.g. "12x128x128"
    double params_m = 0.0;
    double flops_g = 0.0;
    double macs_g = 0.0;
    double size_mb = 0.0;  // 4 bytes per parameter
    double cpu_latency_s = 0.0;
    std::optional<double> accel_latency_ms;
    double decode_per_s = 0.0;
    double energy_pj = 0.0;
};

/// Complexity counts plus host (and, when requested, accelerator) timing.
BenchmarkReport benchmark(Backbone& model, const std::string& name, const std::string& accel_device, int warmup,
                          int reps);

std::string to_json(const EvalReport& r);
std::string confusion_csv(const EvalReport& r);
std::string to_json(const std::vector<BenchmarkReport>& rows);
/// Aligned text table: complexity columns then runtime/energy columns.
std::string to_table(const std::vector<BenchmarkReport>& rows);

}  // namespace mavact::bench
