#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "mavact/backbone.hpp"
#include "mavact/datamodel.hpp"
#include "mavact/losses.hpp"
#include "mavact/sokd.hpp"
#include "mavact/views.hpp"

namespace mavact::train {

struct TrainConfig {
    double lr = 1e-4;
    int epochs = 25;
    int batch_size = 16;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::vector<int> stages = {0, 1, 2, 3};  // active SOKD stages, 0..3 = C2..C5
    loss::HybridLossWeights weights;
    int trials = 10;
    AugmentConfig augment;
    bool deterministic = true;  // single-threaded kernels

    /// Throws ConfigError naming the offending `train.*` / `loss.*` key.
    void validate() const;
};

struct StepRecord {
    int epoch = 0;
    int step = 0;
    double total = 0.0;
    loss::LossComponents parts;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;  // mean total loss over the epoch's steps
    loss::LossComponents parts;  // epoch means
    double train_accuracy = 0.0;  // running, on the augmented training views
    double test_accuracy = 0.0;
    double orthogonality_error = 0.0;  // max_l ||P_l P_l^T - I||_F, 0 without projectors
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::vector<StepRecord> steps;

    std::string csv() const;
    double final_test_accuracy() const { return epochs.empty() ? 0.0 : epochs.back().test_accuracy; }
    double final_train_accuracy() const { return epochs.empty() ? 0.0 : epochs.back().train_accuracy; }
};

struct TrainResult {
    nn::Backbone model{nullptr};
    sokd::SokdHead head{nullptr};  // null for runs without a teacher
    TrainHistory history;
};

/// Cross-entropy-only pretraining of the teacher on `split.train`.
TrainResult train_teacher(const TrainConfig& cfg, const nn::BackboneConfig& teacher_cfg, const ClipDataset& data,
                          const Split& split, std::ostream* log = nullptr);

/// Student trained on its own with cross-entropy only (no teacher).
TrainResult train_baseline(const TrainConfig& cfg, const nn::BackboneConfig& student_cfg, const ClipDataset& data,
                           const Split& split, std::ostream* log = nullptr);

/// Student trained with the hybrid objective against a frozen teacher. Only
/// the student, adapters and projector raw matrices are updated.
TrainResult distill_student(const TrainConfig& cfg, const nn::BackboneConfig& student_cfg, const ClipDataset& data,
                            const Split& split, nn::Backbone& teacher, std::ostream* log = nullptr);

/// Freezes a teacher: eval mode, no gradients.
void freeze(nn::Backbone& teacher);

/// Builds a teacher from `teacher_cfg` and loads its weights. A checkpoint
/// whose recorded stage widths differ from the config throws ConfigError.
nn::Backbone load_teacher(const std::string& path, const nn::BackboneConfig& teacher_cfg);
void save_model(const std::string& path, const TrainResult& result, const std::string& meta_json);
/// Inference-only load: the "sokd." namespace is skipped.
nn::Backbone load_student(const std::string& path, const nn::BackboneConfig& student_cfg);

struct TrialOutcome {
    TrialReport report;
    std::vector<TrainHistory> histories;  // successful trials only
};

/// n distillation runs with seeds cfg.seed + 0..n-1 (teacher may be null for
/// CE-only runs). Failed trials are recorded in report.errors.
TrialOutcome run_trials(const TrainConfig& cfg, const nn::BackboneConfig& student_cfg, const ClipDataset& data,
                        const Split& split, nn::Backbone* teacher, int n, std::ostream* log = nullptr);

struct AblationRow {
    std::string name;
    TrialReport report;
};

struct AblationReport {
    std::vector<AblationRow> components;   // SOKD / SOKD+CL / SOKD+CL+Attention
    std::vector<AblationRow> stage_sweep;  // C2 / C2-C3 / C2-C4 / C2-C5
    std::vector<AblationRow> sokd_compare; // with / without SOKD
    std::vector<std::vector<double>> with_sokd_curve;     // per-epoch test accuracy, per trial
    std::vector<std::vector<double>> without_sokd_curve;
    std::vector<std::string> flags;  // reported ordering violations

    std::string json() const;
};

/// Component, stage-count and with/without-SOKD comparisons, n trials each.
/// Identical configurations are trained once and shared between tables.
AblationReport run_ablation(const TrainConfig& cfg, const nn::BackboneConfig& student_cfg, const ClipDataset& data,
                            const Split& split, nn::Backbone& teacher, int n, std::ostream* log = nullptr);

double median(std::vector<double> values);

}  // namespace mavact::train
