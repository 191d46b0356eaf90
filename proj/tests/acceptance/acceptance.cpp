// Acceptance suite: one PASS/FAIL line per criterion.
//
//   mavact_acceptance [--only 1,2,...] [--known-fail 2] [--size 64] [--workdir DIR]
//
// Exit status is 0 when every selected criterion passes, except that criteria
// listed with --known-fail are required to FAIL (so an unexpected pass is also
// reported). Criterion 9 trains 11 networks and is slow; ctest runs it as a
// separate entry.

#include <CLI11.hpp>
#include <json.hpp>
#include <torch/torch.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "mavact/backbone.hpp"
#include "mavact/cli.hpp"
#include "mavact/config.hpp"
#include "mavact/datamodel.hpp"
#include "mavact/evalbench.hpp"
#include "mavact/losses.hpp"
#include "mavact/saa.hpp"
#include "mavact/sokd.hpp"
#include "mavact/synthgen.hpp"
#include "mavact/trainer.hpp"

namespace fs = std::filesystem;
using namespace mavact;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 6) {
    std::ostringstream s;
    s << std::setprecision(digits) << v;
    return s.str();
}

const auto kF64 = torch::TensorOptions().dtype(torch::kFloat64);

// ---- shared oracles -------------------------------------------------------

torch::Tensor numeric_gradient(const std::function<double(const torch::Tensor&)>& f, const torch::Tensor& x,
                               double h = 1e-6) {
    auto base = x.detach().clone();
    auto grad = torch::zeros_like(base);
    auto flat = base.view(-1);
    auto g = grad.view(-1);
    for (int64_t i = 0; i < flat.numel(); ++i) {
        const double orig = flat[i].item<double>();
        flat[i] = orig + h;
        const double fp = f(base);
        flat[i] = orig - h;
        const double fm = f(base);
        flat[i] = orig;
        g[i] = (fp - fm) / (2 * h);
    }
    return grad;
}

double rel_err(const torch::Tensor& a, const torch::Tensor& b) {
    const double scale = std::max({a.norm().item<double>(), b.norm().item<double>(), 1e-8});
    return (a - b).norm().item<double>() / scale;
}

torch::Tensor series_exp(const torch::Tensor& w) {
    const auto n = w.size(0);
    auto a = w.accessor<double, 2>();
    std::vector<long double> term(n * n, 0.0L), sum(n * n, 0.0L), next(n * n);
    for (int64_t i = 0; i < n; ++i) term[i * n + i] = sum[i * n + i] = 1.0L;
    for (int k = 1; k <= 30; ++k) {
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < n; ++j) {
                long double acc = 0;
                for (int64_t m = 0; m < n; ++m) acc += term[i * n + m] * static_cast<long double>(a[m][j]);
                next[i * n + j] = acc / k;
            }
        term.swap(next);
        for (int64_t i = 0; i < n * n; ++i) sum[i] += term[i];
    }
    auto out = torch::empty({n, n}, kF64);
    for (int64_t i = 0; i < n * n; ++i) out.view(-1)[i] = static_cast<double>(sum[i]);
    return out;
}

// ---- criteria -------------------------------------------------------------

Outcome energy_model() {
    // (MAC G, printed energy pJ) from the efficiency table
    const std::vector<std::pair<double, double>> rows = {
        {29.60, 136.16}, {19.33, 88.91}, {93.07, 428.12}, {104.65, 481.39}, {64.32, 295.87}};
    double worst = 0;
    for (auto [macs, pj] : rows) worst = std::max(worst, std::abs(bench::estimate_energy(macs) - pj));
    return {worst <= 0.01, "max |error| " + fmt(worst, 3) + " pJ (tolerance 0.01)"};
}

Outcome decode_model() {
    const std::vector<std::tuple<std::string, double, double>> rows = {
        {"C3D", 0.122, 8.183}, {"CoST", 0.69, 1.44}, {"Svformer", 0.56, 1.78}, {"MAVR-Net", 0.32, 3.11}, {"ours", 0.113, 8.84}};
    bool ok = true;
    std::string detail;
    for (const auto& [name, cpu, printed] : rows) {
        const double rel = std::abs(bench::decode_rate(cpu) - printed) / printed;
        if (rel > 0.005) {
            ok = false;
            detail += name + " " + fmt(100 * rel, 3) + "% off; ";
        }
    }
    return {ok, ok ? "all rows within 0.5%" : detail + "others within 0.5%"};
}

Outcome flops_consistency() {
    bool ok = true;
    std::string detail;
    for (auto cfg : {nn::BackboneConfig::teacher_default(), nn::BackboneConfig::student_default()}) {
        for (bool saa : {false, true}) {
            cfg.saa_enabled = saa;
            nn::Backbone m(cfg);
            auto c = bench::count_macs(*m, {1, cfg.input_frames, cfg.input_height, cfg.input_width, 3});
            ok &= c.flops_g == 2.0 * c.macs_g && c.macs > 0;
            if (!saa) detail += std::string(nn::to_string(cfg.role)) + " " + fmt(c.macs_g, 4) + " GMAC; ";
        }
    }
    // conv 2->3 (3x3, pad 1) on 10x10, flatten, linear 300->4
    torch::nn::Sequential toy(torch::nn::Conv2d(torch::nn::Conv2dOptions(2, 3, 3).padding(1)), torch::nn::ReLU(),
                              torch::nn::Flatten(), torch::nn::Linear(300, 4));
    const int64_t hand = 3 * 2 * 9 * 100 + 300 * 4;
    auto t = bench::count_macs(*toy, {1, 2, 10, 10});
    ok &= t.macs == hand && t.flops_g == 2.0 * t.macs_g;
    return {ok, detail + "toy " + std::to_string(t.macs) + " vs hand " + std::to_string(hand)};
}

Outcome orthogonality() {
    torch::manual_seed(4);
    double worst_orth = 0, worst_gram = 0;
    int count = 0;
    for (int64_t d : {4, 16, 64}) {
        const int n = d == 64 ? 334 : 333;
        for (int i = 0; i < n; ++i, ++count) {
            auto raw = torch::randn({d, d}, kF64) * (0.1 + 0.01 * (i % 100));
            auto p = sokd::matrix_exp(sokd::skew(raw));
            worst_orth = std::max(worst_orth, sokd::orthogonality_error(p));
            auto f = torch::randn({8, d}, kF64);
            auto g0 = torch::mm(f, f.t());
            auto fp = sokd::project(f, p);
            auto g1 = torch::mm(fp, fp.t());
            worst_gram = std::max(worst_gram, ((g1 - g0).abs() / (1 + g0.abs())).max().item<double>());
        }
    }
    return {count == 1000 && worst_orth <= 1e-5 && worst_gram <= 1e-5,
            std::to_string(count) + " matrices, max ||PP^T-I||_F " + fmt(worst_orth, 3) + ", max Gram drift " +
                fmt(worst_gram, 3)};
}

Outcome matrix_exp_oracle() {
    torch::manual_seed(5);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        const int64_t d = 2 + i % 15;
        auto r = torch::randn({d, d}, kF64);
        auto w = r - r.t();
        w = w * ((0.2 + 0.05 * i) / w.norm().item<double>());
        worst = std::max(worst, (sokd::matrix_exp(w) - series_exp(w)).abs().max().item<double>());
    }
    return {worst <= 1e-8, "100 matrices, ||W||_F in [0.2, 5.15], max |diff| " + fmt(worst, 3)};
}

Outcome gradients() {
    std::map<std::string, double> worst;
    auto note = [&](const std::string& k, double e) { worst[k] = std::max(worst[k], e); };
    const std::array<int64_t, 4> sd = {2, 3, 3, 4}, td = {3, 3, 4, 5};
    auto labels = torch::tensor({0, 2, 1, 3}, torch::kLong);
    for (int i = 0; i < 20; ++i) {
        torch::manual_seed(1000 + i);
        // sokd_loss through adapters and projectors
        sokd::SokdHead head(sd, td);
        head->to(torch::kFloat64);
        {
            torch::NoGradGuard g;
            for (auto& p : head->projectors) p->raw.copy_(torch::randn_like(p->raw) * 0.3);
        }
        std::array<torch::Tensor, 4> zs, zt;
        for (int l = 0; l < 4; ++l) zs[l] = torch::randn({4, sd[l]}, kF64), zt[l] = torch::randn({4, td[l]}, kF64);
        const int l = i % 4;
        for (torch::Tensor* param : {&head->adapters[l]->linear->weight, &head->projectors[l]->raw}) {
            auto f = [&](const torch::Tensor& v) {
                torch::NoGradGuard g;
                auto saved = param->clone();
                param->copy_(v);
                const double out = head->loss(zs, zt, {0, 1, 2, 3}).item<double>();
                param->copy_(saved);
                return out;
            };
            head->zero_grad();
            head->loss(zs, zt, {0, 1, 2, 3}).backward();
            note("sokd_loss", rel_err(param->grad(), numeric_gradient(f, *param)));
        }

        auto q = torch::randn({4, 5}, kF64), k = torch::randn({4, 5}, kF64);
        auto nce = [&](const torch::Tensor& v) {
            return loss::info_nce(loss::l2_normalize(v), loss::l2_normalize(k), 0.1).item<double>();
        };
        auto qv = q.clone().requires_grad_(true);
        loss::info_nce(loss::l2_normalize(qv), loss::l2_normalize(k), 0.1).backward();
        note("info_nce", rel_err(qv.grad(), numeric_gradient(nce, q)));

        auto logits = torch::randn({4, 4}, kF64), teacher = torch::randn({4, 4}, kF64);
        auto ce = [&](const torch::Tensor& v) { return loss::cross_entropy(v, labels).item<double>(); };
        auto lv = logits.clone().requires_grad_(true);
        loss::cross_entropy(lv, labels).backward();
        note("cross_entropy", rel_err(lv.grad(), numeric_gradient(ce, logits)));

        auto kd = [&](const torch::Tensor& v) { return loss::soft_kd(v, teacher, 4.0).item<double>(); };
        auto sv = logits.clone().requires_grad_(true);
        loss::soft_kd(sv, teacher, 4.0).backward();
        note("soft_kd", rel_err(sv.grad(), numeric_gradient(kd, logits)));

        auto x = torch::randn({1, 2, 3, 4, 4}, kF64), gout = torch::randn({1, 2, 3, 4, 4}, kF64);
        auto sa = [&](const torch::Tensor& v) { return (saa::apply_saa(v) * gout).sum().item<double>(); };
        auto xv = x.clone().requires_grad_(true);
        (saa::apply_saa(xv) * gout).sum().backward();
        note("apply_saa", rel_err(xv.grad(), numeric_gradient(sa, x)));
    }
    bool ok = true;
    std::string detail = "20 instances each; max rel err";
    for (const auto& [k, v] : worst) {
        ok &= v < 1e-4;
        detail += " " + k + " " + fmt(v, 2);
    }
    return {ok && worst.size() == 5, detail};
}

Outcome saa_contract() {
    auto cfg = nn::BackboneConfig::student_default();
    cfg.saa_enabled = false;
    nn::Backbone off(cfg);
    cfg.saa_enabled = true;
    cfg.saa_stages = {0, 1, 2, 3};
    nn::Backbone on(cfg);
    const auto delta = nn::count_params(*on) - nn::count_params(*off);
    const bool no_params = delta == 0 && saa::Saa()->parameters().empty();

    torch::manual_seed(6);
    auto w = saa::attention_weights(saa::similarity_map(torch::randn({2, 8, 4, 16, 16}, kF64)));
    const bool in_range = w.min().item<double>() > 0.0 && w.max().item<double>() < 1.0;

    const double uniform = 1.0 / (1.0 + std::exp(0.25));
    auto constant = torch::full({1, 3, 4, 5, 5}, 0.3, kF64);
    const double c_err =
        (saa::attention_weights(saa::similarity_map(constant)) - uniform).abs().max().item<double>();

    // S = [4, 0] has population variance 4, equal to the first voxel.
    auto half = saa::attention_weights(torch::tensor({4.0, 0.0}, kF64).view({1, 1, 1, 1, 2})).view(-1)[0];
    const double h_err = std::abs(half.item<double>() - 0.5);

    return {no_params && in_range && c_err <= 1e-6 && h_err <= 1e-6,
            "param delta " + std::to_string(delta) + ", weights in (0,1) " + (in_range ? "yes" : "no") +
                ", constant-input error " + fmt(c_err, 2) + ", S=var error " + fmt(h_err, 2)};
}

Outcome infonce_closed_forms() {
    auto v = torch::ones({8, 3}, kF64) / std::sqrt(3.0);
    const double uniform = loss::info_nce(v, v, 0.07).item<double>();
    auto q = torch::tensor({1.0, 0.0, -1.0, 0.0}, kF64).view({2, 2});
    const double saturated = loss::info_nce(q, q, 0.05).item<double>();
    const double e = std::abs(uniform - std::log(8.0));
    return {e <= 1e-6 && saturated < 1e-10,
            "uniform " + fmt(uniform, 10) + " (ln 8 error " + fmt(e, 2) + "), saturated " + fmt(saturated, 3)};
}

cli::RunConfig e2e_config(int size) {
    nlohmann::json j = {{"data", {{"height", size}, {"width", size}}}};
    return cli::parse_config_text(j.dump());
}

Outcome end_to_end(int size) {
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = e2e_config(size);
    auto data = synth::generate_dataset(cfg.data.dataset_spec());
    auto split = split_dataset(data, cfg.data.split());

    auto teacher = train::train_teacher(cfg.train, cfg.teacher, data, split, &std::cerr);
    const double teacher_acc = teacher.history.final_train_accuracy();
    train::freeze(teacher.model);

    std::vector<double> full, ce, diff;
    for (int s = 0; s < 5; ++s) {
        auto t = cfg.train;
        t.seed = cfg.train.seed + s;
        auto a = train::distill_student(t, cfg.student, data, split, teacher.model, &std::cerr);
        auto b = train::train_baseline(t, cfg.student, data, split, &std::cerr);
        full.push_back(a.history.final_test_accuracy());
        ce.push_back(b.history.final_test_accuracy());
        diff.push_back(full.back() - ce.back());
        std::cerr << "seed " << t.seed << ": hybrid " << full.back() << " ce-only " << ce.back() << '\n';
    }
    const double gap = train::median(full) - train::median(ce);
    const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    std::string list = "hybrid [";
    for (double v : full) list += fmt(v, 4) + " ";
    list += "] ce-only [";
    for (double v : ce) list += fmt(v, 4) + " ";
    list += "]";
    return {teacher_acc >= 0.95 && gap >= 0.03,
            std::to_string(size) + "px; teacher train acc " + fmt(teacher_acc, 4) + "; median hybrid " +
                fmt(train::median(full), 4) + " vs ce-only " + fmt(train::median(ce), 4) + " (gap " +
                fmt(100 * gap, 3) + " points, paired median " + fmt(100 * train::median(diff), 3) + "); " + list +
                "; " + fmt(minutes, 3) + " min"};
}

Outcome stage_sweep(const fs::path& work) {
    const auto dir = work / "ablate";
    fs::remove_all(dir);
    fs::create_directories(dir);
    nlohmann::json c = {{"data", {{"per_class", 6}, {"height", 32}, {"width", 32}, {"frames", 8}}},
                        {"train", {{"epochs", 2}, {"batch_size", 4}, {"crop_frames", 6}, {"trials", 2}}}};
    const auto cfg_path = (dir / "c.json").string();
    std::ofstream(cfg_path) << c.dump();
    std::ostringstream log, err;
    for (const char* cmd : {"gen-data", "train-teacher", "ablate"}) {
        const char* argv[] = {"mavact", cmd, "-c", cfg_path.c_str(), "-o", dir.c_str()};
        if (cli::run(6, argv, log, err) != 0) return {false, std::string(cmd) + " failed: " + err.str()};
    }
    std::ifstream in(dir / "ablate.json");
    auto j = nlohmann::json::parse(in);
    const auto& sweep = j["stage_sweep"];
    bool ok = sweep.size() == 4 && j["components"].size() == 3;
    std::string detail;
    for (const auto& row : sweep) {
        ok &= row["accuracies"].size() == 2 && row.contains("mean") && row.contains("std");
        detail += row["name"].get<std::string>() + " " + fmt(100 * row["mean"].get<double>(), 3) + "+-" +
                  fmt(100 * row["std"].get<double>(), 3) + "%; ";
    }
    bool monotone = true;
    for (std::size_t i = 1; i < sweep.size(); ++i) monotone &= sweep[i]["mean"] >= sweep[i - 1]["mean"];
    return {ok, detail + (monotone ? "monotone" : "not monotone") + " (reported only)"};
}

Outcome reproducibility(const fs::path& work) {
    // datasets: bit-identical arrays and files
    synth::DatasetSpec spec;
    spec.per_class = 6;
    spec.seed = 21;
    spec.render = synth::RenderParams::for_frame(32, 32, 8);
    const auto a_path = (work / "repro_a.h5").string(), b_path = (work / "repro_b.h5").string();
    auto a = synth::gen_dataset(spec, a_path);
    auto b = synth::gen_dataset(spec, b_path);
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const bool data_same = a.pixels == b.pixels && a.labels == b.labels && slurp(a_path) == slurp(b_path);

    auto s1 = split_dataset(a, SplitSpec{3, 4, 9});
    auto s2 = split_dataset(b, SplitSpec{3, 4, 9});
    const bool split_same = s1.train == s2.train && s1.test == s2.test;

    train::TrainConfig t;
    t.epochs = 2;
    t.batch_size = 4;
    t.seed = 13;
    auto tcfg = nn::BackboneConfig::teacher_default(), scfg = nn::BackboneConfig::student_default();
    for (auto* c : {&tcfg, &scfg}) {
        c->input_frames = 6;
        c->input_height = c->input_width = 32;
    }
    auto teacher = train::train_teacher(t, tcfg, a, s1).model;
    auto r1 = train::distill_student(t, scfg, a, s1, teacher);
    auto r2 = train::distill_student(t, scfg, b, s2, teacher);
    auto t2 = train::train_teacher(t, tcfg, b, s2).model;
    double loss_diff = std::abs(r1.history.epochs.back().loss - r2.history.epochs.back().loss);
    const auto tp1 = teacher->parameters(), tp2 = t2->parameters();
    bool teacher_same = tp1.size() == tp2.size();
    for (std::size_t i = 0; teacher_same && i < tp1.size(); ++i) teacher_same = torch::equal(tp1[i], tp2[i]);

    fs::remove(a_path);
    fs::remove(b_path);
    return {data_same && split_same && loss_diff <= 1e-6 && teacher_same,
            std::string("datasets ") + (data_same ? "bit-identical" : "DIFFER") + ", splits " +
                (split_same ? "identical" : "DIFFER") + ", final distill loss diff " + fmt(loss_diff, 3) +
                ", teacher weights " + (teacher_same ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> only;
    std::vector<int> known_fail;
    int size = 64;
    std::string workdir = (fs::temp_directory_path() / "mavact-acceptance").string();
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
    app.add_option("--known-fail", known_fail, "criteria expected to fail")->delimiter(',');
    app.add_option("--size", size, "frame size for criterion 9");
    app.add_option("--workdir", workdir, "scratch directory");
    CLI11_PARSE(app, argc, argv);

    torch::set_num_threads(1);
    const fs::path work = workdir;
    fs::create_directories(work);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"energy model reproduces the reference table", energy_model},
        {"decode rate reproduces the reference table within 0.5%", decode_model},
        {"flops = 2 macs; toy net closed form", flops_consistency},
        {"projector orthogonality and isometry", orthogonality},
        {"matrix exponential vs 30-term series", matrix_exp_oracle},
        {"analytic vs finite-difference gradients", gradients},
        {"SAA contract", saa_contract},
        {"InfoNCE closed forms", infonce_closed_forms},
        {"end-to-end distillation beats CE-only by 3 points", [&] { return end_to_end(size); }},
        {"stage-sweep harness", [&] { return stage_sweep(work); }},
        {"reproducibility", [&] { return reproducibility(work); }},
    };
    const std::set<int> selected(only.begin(), only.end());
    const std::set<int> expected_fail(known_fail.begin(), known_fail.end());

    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool expect_fail = expected_fail.count(id) > 0;
        if (o.pass == expect_fail) ++unexpected;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << std::setw(2) << id << ": "
                  << criteria[i].first << " | " << o.detail << " | " << fmt(secs, 3) << " s"
                  << (expect_fail ? (o.pass ? " | UNEXPECTED PASS of known failure" : " | known failure") : "")
                  << std::endl;
    }
    return unexpected == 0 ? 0 : 1;
}
