#include "mavact/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mavact/errors.hpp"
#include "mavact/views.hpp"

namespace mavact::bench {

double precision(const ClassCounts& c) {
    const auto d = c.tp + c.fp;
    return d == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

double recall(const ClassCounts& c) {
    const auto d = c.tp + c.fn;
    return d == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

EvalReport evaluate_predictions(std::span<const int64_t> truth, std::span<const int64_t> predicted) {
    if (truth.empty()) throw std::invalid_argument("evaluate: empty dataset");
    if (truth.size() != predicted.size()) throw std::invalid_argument("evaluate: length mismatch");
    EvalReport r;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= kNumActions || predicted[i] < 0 || predicted[i] >= kNumActions) {
            throw std::invalid_argument("evaluate: class index out of range");
        }
        ++r.confusion[truth[i]][predicted[i]];
    }
    int64_t correct = 0;
    double p_sum = 0.0, r_sum = 0.0;
    for (int c = 0; c < kNumActions; ++c) {
        ClassCounts k;
        k.tp = r.confusion[c][c];
        for (int o = 0; o < kNumActions; ++o) {
            if (o == c) continue;
            k.fn += r.confusion[c][o];
            k.fp += r.confusion[o][c];
        }
        correct += k.tp;
        if (k.tp + k.fn == 0) {
            r.warnings.push_back("class " + std::string(to_string(static_cast<ActionLabel>(c))) +
                                 " has no support; counted as 0 in macro averages");
        }
        p_sum += precision(k);
        r_sum += recall(k);
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    r.macro_precision = p_sum / kNumActions;
    r.macro_recall = r_sum / kNumActions;
    return r;
}

EvalReport evaluate(Backbone& model, const ClipDataset& data, std::span<const std::size_t> indices,
                    int batch_size) {
    if (indices.empty()) throw std::invalid_argument("evaluate: empty dataset");
    if (batch_size < 1) throw std::invalid_argument("evaluate: batch size must be >= 1");
    const int crop = model->config().input_frames;
    const bool was_training = model->is_training();
    model->eval();
    torch::NoGradGuard no_grad;

    std::vector<int64_t> truth, predicted;
    for (std::size_t start = 0; start < indices.size(); start += batch_size) {
        const auto n = std::min<std::size_t>(batch_size, indices.size() - start);
        auto idx = indices.subspan(start, n);
        std::vector<ViewParams> views(n, center_view(data.shape.frames, crop));
        auto pred = model->forward(gather_views(data, idx, views, crop)).argmax(1);
        for (std::size_t i = 0; i < n; ++i) {
            truth.push_back(wire_code(data.labels[idx[i]]));
            predicted.push_back(pred[static_cast<int64_t>(i)].item<int64_t>());
        }
    }
    model->train(was_training);
    return evaluate_predictions(truth, predicted);
}

EvalReport evaluate(Backbone& model, const ClipDataset& data) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    return evaluate(model, data, all);
}

MacCount count_macs(const torch::nn::Module& model, const Shape& input_shape) {
    MacLedger ledger;
    profile_module(model, input_shape, ledger);
    MacCount c;
    c.macs = ledger.total();
    c.macs_g = static_cast<double>(c.macs) / 1e9;
    c.flops_g = 2.0 * c.macs_g;
    return c;
}

double estimate_energy(double macs_g) {
    if (!(macs_g >= 0.0)) throw std::invalid_argument("estimate_energy: MAC count must be >= 0");
    return macs_g * kPicojoulePerGigaMac;
}

double decode_rate(double cpu_latency_s) {
    if (!(cpu_latency_s > 0.0)) throw std::invalid_argument("decode_rate: latency must be > 0");
    return 1.0 / cpu_latency_s;
}

LatencyStats measure_latency(Backbone& model, const std::string& device_name, int warmup, int reps) {
    if (reps < 1) throw std::invalid_argument("measure_latency: reps must be >= 1");
    if (warmup < 0) throw std::invalid_argument("measure_latency: warmup must be >= 0");
    const bool cuda = device_name == "cuda";
    if (!cuda && device_name != "cpu") throw EnvironmentError("unknown device '" + device_name + "'");
    if (cuda && !torch::cuda::is_available()) throw EnvironmentError("device 'cuda' is not available");

    const auto& cfg = model->config();
    const torch::Device device = cuda ? torch::Device(torch::kCUDA) : torch::Device(torch::kCPU);
    // single-sample protocol
    auto input = torch::randint(0, 256, {1, cfg.input_frames, cfg.input_height, cfg.input_width, 3},
                                torch::TensorOptions().dtype(torch::kUInt8))
                     .to(device);
    TORCH_CHECK(input.size(0) == 1, "latency harness must time batch-1 forwards");

    const int threads = torch::get_num_threads();
    if (!cuda) torch::set_num_threads(1);
    const bool was_training = model->is_training();
    model->eval();
    if (cuda) model->to(device);
    torch::NoGradGuard no_grad;

    auto sync = [&] {
        if (cuda) torch::cuda::synchronize();
    };
    for (int i = 0; i < warmup; ++i) model->forward(input);
    LatencyStats s;
    for (int i = 0; i < reps; ++i) {
        sync();
        const auto t0 = std::chrono::steady_clock::now();
        model->forward(input);
        sync();
        s.samples_s.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    if (cuda) model->to(torch::kCPU);
    model->train(was_training);
    torch::set_num_threads(threads);

    s.mean_s = std::accumulate(s.samples_s.begin(), s.samples_s.end(), 0.0) / reps;
    s.min_s = *std::min_element(s.samples_s.begin(), s.samples_s.end());
    s.max_s = *std::max_element(s.samples_s.begin(), s.samples_s.end());
    return s;
}

BenchmarkReport benchmark(Backbone& model, const std::string& name, const std::string& accel_device, int warmup,
                          int reps) {
    const auto& cfg = model->config();
    BenchmarkReport r;
    r.model = name;
    r.input = std::to_string(cfg.input_frames) + "x" + std::to_string(cfg.input_height) + "x" +
              std::to_string(cfg.input_width);
    const auto params = nn::count_params(*model);
    r.params_m = static_cast<double>(params) / 1e6;
    r.size_mb = static_cast<double>(params) * 4.0 / (1024.0 * 1024.0);
    const auto macs = count_macs(*model, {1, cfg.input_frames, cfg.input_height, cfg.input_width, 3});
    r.macs_g = macs.macs_g;
    r.flops_g = macs.flops_g;
    r.cpu_latency_s = measure_latency(model, "cpu", warmup, reps).mean_s;
    if (!accel_device.empty() && accel_device != "cpu") {
        r.accel_latency_ms = 1e3 * measure_latency(model, accel_device, warmup, reps).mean_s;
    }
    r.decode_per_s = decode_rate(r.cpu_latency_s);
    r.energy_pj = estimate_energy(r.macs_g);
    return r;
}

std::string to_json(const EvalReport& r) {
    nlohmann::json j;
    j["accuracy"] = r.accuracy;
    j["macro_precision"] = r.macro_precision;
    j["macro_recall"] = r.macro_recall;
    j["confusion"] = r.confusion;
    j["warnings"] = r.warnings;
    return j.dump(2);
}

std::string confusion_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "true\\pred";
    for (auto a : kAllActions) out << ',' << to_string(a);
    out << '\n';
    for (int t = 0; t < kNumActions; ++t) {
        out << to_string(static_cast<ActionLabel>(t));
        for (int p = 0; p < kNumActions; ++p) out << ',' << r.confusion[t][p];
        out << '\n';
    }
    return out.str();
}

std::string to_json(const std::vector<BenchmarkReport>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j;
        j["model"] = r.model;
        j["input"] = r.input;
        j["params_m"] = r.params_m;
        j["flops_g"] = r.flops_g;
        j["macs_g"] = r.macs_g;
        j["size_mb"] = r.size_mb;
        j["cpu_latency_s"] = r.cpu_latency_s;
        j["accel_latency_ms"] = r.accel_latency_ms ? nlohmann::json(*r.accel_latency_ms) : nlohmann::json(nullptr);
        j["decode_per_s"] = r.decode_per_s;
        j["energy_pj"] = r.energy_pj;
        arr.push_back(j);
    }
    return arr.dump(2);
}

std::string to_table(const std::vector<BenchmarkReport>& rows) {
    std::ostringstream out;
    out << std::fixed;
    out << std::left << std::setw(12) << "model" << std::right << std::setw(14) << "params (M)" << std::setw(12)
        << "FLOPs (G)" << std::setw(12) << "MAC (G)" << std::setw(12) << "size (MB)" << '\n';
    for (const auto& r : rows) {
        out << std::left << std::setw(12) << r.model << std::right << std::setprecision(4) << std::setw(14)
            << r.params_m << std::setw(12) << r.flops_g << std::setw(12) << r.macs_g << std::setw(12) << r.size_mb
            << '\n';
    }
    out << '\n';
    out << std::left << std::setw(12) << "model" << std::setw(14) << "input" << std::right << std::setw(12)
        << "CPU (s)" << std::setw(12) << "GPU (ms)" << std::setw(14) << "decoding (/s)" << std::setw(14)
        << "energy (pJ)" << '\n';
    for (const auto& r : rows) {
        out << std::left << std::setw(12) << r.model << std::setw(14) << r.input << std::right
            << std::setprecision(4) << std::setw(12) << r.cpu_latency_s << std::setw(12);
        if (r.accel_latency_ms) {
            out << std::setprecision(2) << *r.accel_latency_ms;
        } else {
            out << "-";
        }
        out << std::setprecision(2) << std::setw(14) << r.decode_per_s << std::setw(14) << r.energy_pj << '\n';
    }
    return out.str();
}

}  // namespace mavact::bench
