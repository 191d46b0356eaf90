#include "mavact/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "mavact/config.hpp"
#include "mavact/errors.hpp"
#include "mavact/evalbench.hpp"

namespace mavact::train {

void TrainConfig::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr", "must be > 0");
    if (epochs < 1) throw ConfigError("train.epochs", "must be >= 1");
    if (batch_size < 2) throw ConfigError("train.batch_size", "must be >= 2");
    if (trials < 1) throw ConfigError("train.trials", "must be >= 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("train.adam_beta1", "must be in [0,1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("train.adam_beta2", "must be in [0,1)");
    if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps", "must be > 0");
    std::set<int> seen;
    for (int s : stages) {
        if (s < 0 || s > 3) throw ConfigError("train.stages", "stage outside C2..C5");
        if (!seen.insert(s).second) throw ConfigError("train.stages", "duplicate stage");
    }
    if (weights.gamma > 0.0 && stages.empty()) throw ConfigError("train.stages", "must be non-empty when gamma > 0");
    if (augment.brightness < 0.0 || augment.brightness > 1.0) {
        throw ConfigError("train.brightness", "must be in [0,1]");
    }
    try {
        weights.validate();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        throw ConfigError("loss." + msg.substr(0, msg.find(' ')), msg);
    }
}

std::string TrainHistory::csv() const {
    std::ostringstream out;
    out << std::setprecision(10);
    out << "epoch,loss,ce,con,distil,kd,train_accuracy,test_accuracy,orthogonality_error\n";
    for (const auto& e : epochs) {
        out << e.epoch << ',' << e.loss << ',' << e.parts.ce << ',' << e.parts.con << ',' << e.parts.distil << ','
            << e.parts.kd << ',' << e.train_accuracy << ',' << e.test_accuracy << ',' << e.orthogonality_error
            << '\n';
    }
    return out.str();
}

namespace {

constexpr std::uint64_t kHeadSeedSalt = 0x50d5eedULL;
constexpr std::uint64_t kDataSeedSalt = 0xda7a5eedULL;

void set_determinism(const TrainConfig& cfg) {
    if (cfg.deterministic) {
        torch::set_num_threads(1);
        at::globalContext().setDeterministicAlgorithms(true, /*warn_only=*/true);
    }
}

void check_dataset(const ClipDataset& data, const Split& split, const nn::BackboneConfig& bcfg) {
    if (split.train.empty()) throw std::invalid_argument("training split is empty");
    if (data.shape.height != bcfg.input_height || data.shape.width != bcfg.input_width ||
        data.shape.frames < bcfg.input_frames) {
        throw ConfigError("data", "clip size " + std::to_string(data.shape.frames) + "x" +
                                      std::to_string(data.shape.height) + "x" + std::to_string(data.shape.width) +
                                      " does not fit the backbone input");
    }
}

std::array<torch::Tensor, nn::kNumStages> pooled(const nn::StageFeatureSet& f) {
    std::array<torch::Tensor, nn::kNumStages> out;
    for (int l = 0; l < nn::kNumStages; ++l) out[l] = nn::pool_stage(f.maps[l]);
    return out;
}

/// One optimisation run shared by teacher pretraining, the CE-only baseline
/// and distillation. With weights (1,0,0,0) it performs exactly the
/// computation of a CE-only run: augmentation draws, initialisation and data
/// order do not depend on which loss terms are active.
TrainResult run_training(const TrainConfig& cfg, const nn::BackboneConfig& model_cfg, const ClipDataset& data,
                         const Split& split, nn::Backbone* teacher, const std::string& tag, std::ostream* log) {
    cfg.validate();
    check_dataset(data, split, model_cfg);
    set_determinism(cfg);
    const auto& w = cfg.weights;
    const bool needs_teacher = w.gamma > 0.0 || w.delta > 0.0;
    if (needs_teacher && teacher == nullptr) {
        throw std::invalid_argument("distillation terms enabled but no teacher supplied");
    }

    TrainResult result;
    torch::manual_seed(cfg.seed);
    result.model = nn::Backbone(model_cfg);
    std::vector<torch::Tensor> params = result.model->parameters();

    if (teacher != nullptr) {
        const auto tdims = (*teacher)->stage_dims();
        torch::manual_seed(cfg.seed ^ kHeadSeedSalt);
        result.head = sokd::SokdHead(result.model->stage_dims(), tdims);
        for (auto& p : result.head->parameters()) params.push_back(p);
    }

    torch::optim::Adam optimizer(params, torch::optim::AdamOptions(cfg.lr)
                                             .betas({cfg.adam_beta1, cfg.adam_beta2})
                                             .eps(cfg.adam_eps));
    std::mt19937_64 rng(cfg.seed ^ kDataSeedSalt);
    const int crop = model_cfg.input_frames;
    const auto zero = torch::zeros({});

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        result.model->train();
        std::vector<std::size_t> order = split.train;
        std::shuffle(order.begin(), order.end(), rng);

        EpochRecord rec;
        rec.epoch = epoch;
        int64_t correct = 0, seen = 0;
        int steps = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const auto n = std::min<std::size_t>(cfg.batch_size, order.size() - start);
            if (n < 2) break;  // a single clip has no in-batch negatives
            std::span<const std::size_t> idx(order.data() + start, n);
            std::vector<ViewParams> v1, v2;
            for (std::size_t i = 0; i < n; ++i) {
                v1.push_back(draw_view(rng, data.shape.frames, crop, cfg.augment));
                v2.push_back(draw_view(rng, data.shape.frames, crop, cfg.augment));
            }
            const auto x1 = gather_views(data, idx, v1, crop);
            const auto labels = gather_labels(data, idx);

            auto out1 = result.model->forward_stages(x1);
            auto ce = loss::cross_entropy(out1.logits, labels);
            auto con = zero, distil = zero, kd = zero;
            if (w.beta > 0.0) {
                auto out2 = result.model->forward_stages(gather_views(data, idx, v2, crop));
                con = loss::info_nce(loss::l2_normalize(out1.embedding), loss::l2_normalize(out2.embedding), w.tau);
            }
            if (needs_teacher) {
                nn::StageFeatureSet tout;
                {
                    torch::NoGradGuard no_grad;
                    tout = (*teacher)->forward_stages(x1);
                }
                if (w.gamma > 0.0) distil = result.head->loss(pooled(out1), pooled(tout), cfg.stages);
                if (w.delta > 0.0) kd = loss::soft_kd(out1.logits, tout.logits, w.t_kd);
            }

            torch::Tensor total;
            try {
                total = loss::hybrid(ce, con, distil, kd, w);
            } catch (const NumericError& e) {
                throw NumericError(tag + ": non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(steps) + " (ce=" + std::to_string(ce.item<double>()) +
                                   " con=" + std::to_string(con.item<double>()) + " distil=" +
                                   std::to_string(distil.item<double>()) + " kd=" +
                                   std::to_string(kd.item<double>()) + ")");
            }
            optimizer.zero_grad();
            total.backward();
            optimizer.step();

            StepRecord step{epoch, steps, total.item<double>(),
                            {ce.item<double>(), con.item<double>(), distil.item<double>(), kd.item<double>()}};
            result.history.steps.push_back(step);
            rec.loss += step.total;
            rec.parts.ce += step.parts.ce;
            rec.parts.con += step.parts.con;
            rec.parts.distil += step.parts.distil;
            rec.parts.kd += step.parts.kd;
            correct += out1.logits.argmax(1).eq(labels).sum().item<int64_t>();
            seen += static_cast<int64_t>(n);
            ++steps;
        }
        if (steps > 0) {
            rec.loss /= steps;
            rec.parts.ce /= steps;
            rec.parts.con /= steps;
            rec.parts.distil /= steps;
            rec.parts.kd /= steps;
        }
        rec.train_accuracy = seen ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
        rec.test_accuracy =
            split.test.empty() ? 0.0 : bench::evaluate(result.model, data, split.test, cfg.batch_size).accuracy;
        rec.orthogonality_error = result.head ? result.head->max_orthogonality_error() : 0.0;
        result.history.epochs.push_back(rec);
        if (log) {
            *log << tag << " epoch " << epoch << "/" << cfg.epochs << std::fixed << std::setprecision(4)
                 << " loss " << rec.loss << " ce " << rec.parts.ce << " con " << rec.parts.con << " distil "
                 << rec.parts.distil << " kd " << rec.parts.kd << " train_acc " << rec.train_accuracy
                 << " test_acc " << rec.test_accuracy << std::defaultfloat << std::endl;
        }
    }
    result.model->eval();
    return result;
}

}  // namespace

TrainResult train_teacher(const TrainConfig& cfg, const nn::BackboneConfig& teacher_cfg, const ClipDataset& data,
                          const Split& split, std::ostream* log) {
    TrainConfig ce_only = cfg;
    ce_only.weights.alpha = 1.0;
    ce_only.weights.beta = ce_only.weights.gamma = ce_only.weights.delta = 0.0;
    return run_training(ce_only, teacher_cfg, data, split, nullptr, "teacher", log);
}

TrainResult train_baseline(const TrainConfig& cfg, const nn::BackboneConfig& student_cfg, const ClipDataset& data,
                           const Split& split, std::ostream* log) {
    TrainConfig ce_only = cfg;
    ce_only.weights.alpha = 1.0;
    ce_only.weights.beta = ce_only.weights.gamma = ce_only.weights.delta = 0.0;
    return run_training(ce_only, student_cfg, data, split, nullptr, "baseline", log);
}

void freeze(nn::Backbone& teacher) {
    teacher->eval();
    for (auto& p : teacher->parameters()) p.set_requires_grad(false);
}

TrainResult distill_student(const TrainConfig& cfg, const nn::BackboneConfig& student_cfg, const ClipDataset& data,
                            const Split& split, nn::Backbone& teacher, std::ostream* log) {
    if (!teacher) throw std::invalid_argument("distill_student: teacher is null");
    freeze(teacher);
    return run_training(cfg, student_cfg, data, split, &teacher, "student", log);
}

nn::Backbone load_teacher(const std::string& path, const nn::BackboneConfig& teacher_cfg) {
    const auto meta_text = nn::read_checkpoint_meta(path);
    if (!meta_text.empty()) {
        const auto meta = nlohmann::json::parse(meta_text, nullptr, /*allow_exceptions=*/false);
        if (meta.is_object() && meta.contains("backbone") && meta["backbone"].contains("widths")) {
            const auto widths = meta["backbone"]["widths"].get<std::vector<int64_t>>();
            if (widths != std::vector<int64_t>(teacher_cfg.widths.begin(), teacher_cfg.widths.end())) {
                throw ConfigError("teacher.widths", "stage dimensions differ from checkpoint " + path);
            }
        }
    }
    nn::Backbone teacher(teacher_cfg);
    nn::load_checkpoint(path, {{"backbone.", teacher.get()}});
    freeze(teacher);
    return teacher;
}

void save_model(const std::string& path, const TrainResult& result, const std::string& meta_json) {
    auto meta = nlohmann::json::parse(meta_json.empty() ? "{}" : meta_json);
    meta["backbone"] = cli::to_json(result.model->config());
    meta["version"] = cli::kToolVersion;
    std::vector<std::pair<std::string, const torch::nn::Module*>> parts = {{"backbone.", result.model.get()}};
    if (result.head) parts.emplace_back("sokd.", result.head.get());
    nn::save_checkpoint(path, parts, meta.dump());
}

nn::Backbone load_student(const std::string& path, const nn::BackboneConfig& student_cfg) {
    nn::Backbone student(student_cfg);
    nn::load_checkpoint(path, {{"backbone.", student.get()}});
    student->eval();
    return student;
}

TrialOutcome run_trials(const TrainConfig& cfg, const nn::BackboneConfig& student_cfg, const ClipDataset& data,
                        const Split& split, nn::Backbone* teacher, int n, std::ostream* log) {
    if (n < 1) throw std::invalid_argument("run_trials: n must be >= 1");
    TrialOutcome out;
    std::vector<double> acc;
    for (int i = 0; i < n; ++i) {
        TrainConfig trial = cfg;
        trial.seed = cfg.seed + static_cast<std::uint64_t>(i);
        try {
            auto r = teacher ? distill_student(trial, student_cfg, data, split, *teacher, log)
                             : train_baseline(trial, student_cfg, data, split, log);
            acc.push_back(r.history.final_test_accuracy());
            out.histories.push_back(std::move(r.history));
        } catch (const std::exception& e) {
            out.report.errors.push_back("trial " + std::to_string(i) + " (seed " + std::to_string(trial.seed) +
                                        "): " + e.what());
        }
    }
    if (!acc.empty()) {
        auto errors = std::move(out.report.errors);
        out.report = summarize_trials(acc);
        out.report.errors = std::move(errors);
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty sequence");
    std::sort(values.begin(), values.end());
    const auto m = values.size() / 2;
    return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

namespace {

nlohmann::json rows_json(const std::vector<AblationRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"name", r.name},
                       {"accuracies", r.report.accuracies},
                       {"mean", r.report.mean},
                       {"std", r.report.std},
                       {"errors", r.report.errors}});
    }
    return arr;
}

}  // namespace

std::string AblationReport::json() const {
    nlohmann::json j;
    j["components"] = rows_json(components);
    j["stage_sweep"] = rows_json(stage_sweep);
    j["sokd_compare"] = rows_json(sokd_compare);
    j["with_sokd_test_accuracy"] = with_sokd_curve;
    j["without_sokd_test_accuracy"] = without_sokd_curve;
    j["flags"] = flags;
    return j.dump(2);
}

AblationReport run_ablation(const TrainConfig& cfg, const nn::BackboneConfig& student_cfg, const ClipDataset& data,
                            const Split& split, nn::Backbone& teacher, int n, std::ostream* log) {
    struct Variant {
        TrainConfig train;
        nn::BackboneConfig student;
        bool use_teacher = true;
    };
    std::map<std::string, TrialOutcome> cache;
    auto run = [&](const Variant& v) -> const TrialOutcome& {
        nlohmann::json key = {{"w", {v.train.weights.alpha, v.train.weights.beta, v.train.weights.gamma,
                                     v.train.weights.delta}},
                              {"stages", v.train.stages},
                              {"student", cli::to_json(v.student)},
                              {"teacher", v.use_teacher}};
        auto it = cache.find(key.dump());
        if (it == cache.end()) {
            it = cache.emplace(key.dump(), run_trials(v.train, v.student, data, split,
                                                      v.use_teacher ? &teacher : nullptr, n, log))
                     .first;
        }
        return it->second;
    };

    nn::BackboneConfig no_saa = student_cfg;
    no_saa.saa_enabled = false;
    nn::BackboneConfig with_saa = student_cfg;
    with_saa.saa_enabled = true;
    if (with_saa.saa_stages.empty()) with_saa.saa_stages = {2, 3};

    TrainConfig sokd_only = cfg;
    sokd_only.weights.beta = 0.0;
    TrainConfig sokd_cl = cfg;

    AblationReport rep;
    rep.components.push_back({"SOKD", run({sokd_only, no_saa}).report});
    rep.components.push_back({"SOKD+CL", run({sokd_cl, no_saa}).report});
    rep.components.push_back({"SOKD+CL+Attention", run({sokd_cl, with_saa}).report});

    const char* sweep_names[] = {"One Stage (C2)", "Two Stage (C2-C3)", "Three Stage (C2-C4)",
                                 "Four Stage (C2-C5)"};
    for (int k = 1; k <= 4; ++k) {
        TrainConfig t = cfg;
        t.stages.clear();
        for (int s = 0; s < k; ++s) t.stages.push_back(s);
        rep.stage_sweep.push_back({sweep_names[k - 1], run({t, student_cfg}).report});
    }

    TrainConfig without = cfg;
    without.weights.alpha = 1.0;
    without.weights.beta = without.weights.gamma = without.weights.delta = 0.0;
    const auto& w_out = run({cfg, student_cfg});
    const auto& wo_out = run({without, student_cfg, false});
    rep.sokd_compare.push_back({"with SOKD", w_out.report});
    rep.sokd_compare.push_back({"without SOKD", wo_out.report});
    for (const auto& h : w_out.histories) {
        std::vector<double> curve;
        for (const auto& e : h.epochs) curve.push_back(e.test_accuracy);
        rep.with_sokd_curve.push_back(curve);
    }
    for (const auto& h : wo_out.histories) {
        std::vector<double> curve;
        for (const auto& e : h.epochs) curve.push_back(e.test_accuracy);
        rep.without_sokd_curve.push_back(curve);
    }

    auto med = [](const TrialReport& r) { return r.accuracies.empty() ? 0.0 : median(r.accuracies); };
    for (std::size_t i = 1; i < rep.components.size(); ++i) {
        if (med(rep.components[i].report) < med(rep.components[i - 1].report)) {
            rep.flags.push_back("median accuracy of " + rep.components[i].name + " below " +
                                rep.components[i - 1].name);
        }
    }
    for (std::size_t i = 1; i < rep.stage_sweep.size(); ++i) {
        if (rep.stage_sweep[i].report.mean < rep.stage_sweep[i - 1].report.mean) {
            rep.flags.push_back("mean accuracy of " + rep.stage_sweep[i].name + " below " +
                                rep.stage_sweep[i - 1].name);
        }
    }
    return rep;
}

}  // namespace mavact::train
