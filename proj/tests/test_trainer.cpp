#include "unit.hpp"

#include <sstream>

#include "mavact/errors.hpp"
#include "mavact/losses.hpp"
#include "mavact/synthgen.hpp"
#include "mavact/trainer.hpp"
#include "test_util.hpp"

using namespace mavact;
using namespace mavact::train;

namespace {

struct Fixture {
    ClipDataset data;
    Split split;
    nn::BackboneConfig student = nn::BackboneConfig::student_default();
    nn::BackboneConfig teacher = nn::BackboneConfig::teacher_default();
    TrainConfig cfg;

    Fixture() {
        synth::DatasetSpec spec;
        spec.per_class = 4;
        spec.seed = 5;
        spec.render = synth::RenderParams::for_frame(32, 32, 8);
        data = synth::generate_dataset(spec);
        split = split_dataset(data, SplitSpec{3, 4, 0});
        for (auto* b : {&student, &teacher}) {
            b->input_frames = 6;
            b->input_height = b->input_width = 32;
        }
        cfg.epochs = 2;
        cfg.batch_size = 4;
        cfg.seed = 3;
    }
};

std::vector<std::pair<std::string, torch::Tensor>> snapshot(const torch::nn::Module& m) {
    std::vector<std::pair<std::string, torch::Tensor>> out;
    for (const auto& p : m.named_parameters()) out.emplace_back(p.key(), p.value().detach().clone());
    for (const auto& b : m.named_buffers()) out.emplace_back(b.key(), b.value().detach().clone());
    return out;
}

}  // namespace

TEST_CASE("config validation names the key") {
    TrainConfig c;
    c.lr = -1;
    try {
        c.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "train.lr");
    }
    c = {};
    c.stages = {};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.batch_size = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.weights.tau = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("teacher training bookkeeping and determinism") {
    Fixture f;
    f.cfg.epochs = 1;
    auto a = train_teacher(f.cfg, f.teacher, f.data, f.split);
    CHECK(a.history.epochs.size() == 1);
    CHECK_FALSE(a.head);
    auto b = train_teacher(f.cfg, f.teacher, f.data, f.split);
    REQUIRE(b.history.epochs.size() == 1);
    CHECK(std::abs(a.history.epochs[0].loss - b.history.epochs[0].loss) <= 1e-6);
    CHECK(a.history.steps.size() == b.history.steps.size());
    for (std::size_t i = 0; i < a.history.steps.size(); ++i) CHECK(a.history.steps[i].total == b.history.steps[i].total);
    for (const auto& s : a.history.steps) {
        CHECK(s.parts.con == 0.0);
        CHECK(s.parts.distil == 0.0);
        CHECK(s.parts.kd == 0.0);
    }
    const auto csv = a.history.csv();
    CHECK(csv.rfind("epoch,loss,", 0) == 0);
}

TEST_CASE("distillation contracts") {
    Fixture f;
    auto teacher = train_teacher(f.cfg, f.teacher, f.data, f.split).model;
    const auto before = snapshot(*teacher);

    auto r = distill_student(f.cfg, f.student, f.data, f.split, teacher);
    REQUIRE(r.history.epochs.size() == 2);
    REQUIRE(r.head);

    SUBCASE("teacher untouched") {
        const auto after = snapshot(*teacher);
        REQUIRE(after.size() == before.size());
        for (std::size_t i = 0; i < after.size(); ++i) {
            INFO(after[i].first);
            CHECK(torch::equal(after[i].second, before[i].second));
        }
        CHECK_FALSE(teacher->is_training());
    }
    SUBCASE("projectors stay orthogonal every epoch") {
        for (const auto& e : r.history.epochs) CHECK(e.orthogonality_error <= 1e-5);
        CHECK(r.head->max_orthogonality_error() <= 1e-5);
    }
    SUBCASE("step totals are the weighted sum of logged parts") {
        for (const auto& s : r.history.steps) {
            CHECK(s.total == doctest::Approx(loss::hybrid(s.parts, f.cfg.weights)).epsilon(1e-5));
            CHECK(s.parts.distil > 0.0);
            CHECK(s.parts.con > 0.0);
        }
    }
    SUBCASE("projector parameters move") {
        bool moved = false;
        for (auto& p : r.head->projectors) moved |= p->raw.abs().max().item<float>() > 0.0f;
        CHECK(moved);
    }
}

TEST_CASE("CE-only weights reproduce the baseline") {
    Fixture f;
    auto teacher = train_teacher(f.cfg, f.teacher, f.data, f.split).model;
    auto cfg = f.cfg;
    cfg.weights.beta = cfg.weights.gamma = cfg.weights.delta = 0.0;
    auto masked = distill_student(cfg, f.student, f.data, f.split, teacher);
    auto base = train_baseline(f.cfg, f.student, f.data, f.split);
    REQUIRE(masked.history.epochs.size() == base.history.epochs.size());
    for (std::size_t i = 0; i < base.history.epochs.size(); ++i) {
        const auto& a = masked.history.epochs[i];
        const auto& b = base.history.epochs[i];
        CHECK(std::abs(a.loss - b.loss) <= 1e-6);
        CHECK(std::abs(a.train_accuracy - b.train_accuracy) <= 1e-6);
        CHECK(std::abs(a.test_accuracy - b.test_accuracy) <= 1e-6);
    }
}

TEST_CASE("trials") {
    Fixture f;
    f.cfg.epochs = 1;
    auto one = run_trials(f.cfg, f.student, f.data, f.split, nullptr, 1);
    CHECK(one.report.accuracies.size() == 1);
    CHECK(one.report.std == 0.0);
    auto a = run_trials(f.cfg, f.student, f.data, f.split, nullptr, 2);
    auto b = run_trials(f.cfg, f.student, f.data, f.split, nullptr, 2);
    CHECK(a.report.accuracies == b.report.accuracies);
    CHECK(a.report.accuracies[0] == one.report.accuracies[0]);
    CHECK(a.histories.size() == 2);
    CHECK(a.report.errors.empty());
    CHECK_THROWS_AS(run_trials(f.cfg, f.student, f.data, f.split, nullptr, 0), std::invalid_argument);
}

TEST_CASE("model persistence") {
    Fixture f;
    f.cfg.epochs = 1;
    test::TempDir dir;
    auto t = train_teacher(f.cfg, f.teacher, f.data, f.split);
    save_model(dir.file("t.ckpt"), t, "{\"role\":\"teacher\"}");
    auto loaded = load_teacher(dir.file("t.ckpt"), f.teacher);
    CHECK_FALSE(loaded->is_training());
    t.model->eval();
    auto x = torch::randint(0, 256, {2, 6, 32, 32, 3}, torch::kUInt8);
    CHECK(torch::equal(loaded->forward(x), t.model->forward(x)));

    auto wrong = f.teacher;
    wrong.widths = {32, 64, 128, 128};
    try {
        load_teacher(dir.file("t.ckpt"), wrong);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "teacher.widths");
    }

    auto s = distill_student(f.cfg, f.student, f.data, f.split, loaded);
    save_model(dir.file("s.ckpt"), s, "{}");
    auto student = load_student(dir.file("s.ckpt"), f.student);
    s.model->eval();
    CHECK(torch::equal(student->forward(x), s.model->forward(x)));
}

TEST_CASE("ablation harness shape") {
    Fixture f;
    f.cfg.epochs = 1;
    auto teacher = train_teacher(f.cfg, f.teacher, f.data, f.split).model;
    std::ostringstream log;
    auto rep = run_ablation(f.cfg, f.student, f.data, f.split, teacher, 1, &log);
    REQUIRE(rep.components.size() == 3);
    CHECK(rep.components[0].name == "SOKD");
    CHECK(rep.components[1].name == "SOKD+CL");
    CHECK(rep.components[2].name == "SOKD+CL+Attention");
    REQUIRE(rep.stage_sweep.size() == 4);
    for (const auto& row : rep.stage_sweep) CHECK(row.report.accuracies.size() == 1);
    REQUIRE(rep.sokd_compare.size() == 2);
    CHECK(rep.with_sokd_curve.size() == 1);
    CHECK(rep.with_sokd_curve[0].size() == 1);
    CHECK(rep.without_sokd_curve.size() == 1);
    // the four-stage sweep row and the full component row are the same run
    CHECK(rep.stage_sweep[3].report.accuracies == rep.components[2].report.accuracies);
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}
