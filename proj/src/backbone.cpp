#include "mavact/backbone.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "mavact/errors.hpp"

namespace mavact::nn {

std::string_view to_string(Role r) { return r == Role::kTeacher ? "teacher" : "student"; }

BackboneConfig BackboneConfig::teacher_default() {
    BackboneConfig c;
    c.role = Role::kTeacher;
    c.widths = {32, 64, 128, 256};
    c.stem_width = 32;
    c.saa_enabled = false;
    c.saa_stages = {};
    return c;
}

BackboneConfig BackboneConfig::student_default() { return BackboneConfig{}; }

void BackboneConfig::validate() const {
    for (auto w : widths) {
        if (w <= 0) throw std::invalid_argument("widths: stage channels must be positive");
    }
    if (stem_width <= 0) throw std::invalid_argument("stem_width: must be positive");
    if (num_classes < 2) throw std::invalid_argument("num_classes: must be >= 2");
    std::set<int> seen;
    for (int s : saa_stages) {
        if (s < 0 || s >= kNumStages) throw std::invalid_argument("saa_stages: stage index outside C2..C5");
        if (!seen.insert(s).second) throw std::invalid_argument("saa_stages: duplicate stage");
    }
    if (input_frames < 1 || input_height < 16 || input_width < 16) {
        throw std::invalid_argument("input size: need T >= 1 and H, W >= 16");
    }
}

bool BackboneConfig::saa_on(int stage) const {
    return saa_enabled && std::find(saa_stages.begin(), saa_stages.end(), stage) != saa_stages.end();
}

torch::Tensor pool_stage(const torch::Tensor& map) {
    if (map.dim() != 5) throw std::invalid_argument("pool_stage: expected (B,C,T,H,W)");
    return map.mean({2, 3, 4});
}

torch::Tensor to_model_input(const torch::Tensor& batch) {
    auto x = batch.scalar_type() == torch::kUInt8 ? batch.to(torch::kFloat) / 255.0 : batch;
    return x.permute({0, 4, 1, 2, 3}).contiguous();
}

int64_t count_params(const torch::nn::Module& module) {
    int64_t n = 0;
    for (const auto& p : module.parameters()) n += p.numel();
    return n;
}

// --- layers ---------------------------------------------------------------

ConvBnActImpl::ConvBnActImpl(int64_t in, int64_t out, torch::ExpandingArray<3> kernel,
                             torch::ExpandingArray<3> stride, int64_t groups, bool relu6, bool activation)
    : relu6_(relu6), activation_(activation) {
    torch::ExpandingArray<3> pad({(*kernel)[0] / 2, (*kernel)[1] / 2, (*kernel)[2] / 2});
    conv = register_module(
        "conv", torch::nn::Conv3d(
                    torch::nn::Conv3dOptions(in, out, kernel).stride(stride).padding(pad).groups(groups).bias(false)));
    bn = register_module("bn", torch::nn::BatchNorm3d(out));
}

torch::Tensor ConvBnActImpl::forward(const torch::Tensor& x) {
    auto y = bn(conv(x));
    if (!activation_) return y;
    return relu6_ ? torch::clamp(y, 0.0, 6.0) : torch::relu(y);
}

bench::Shape ConvBnActImpl::profile(const bench::Shape& in, bench::MacLedger& ledger) const {
    return bench::profile_module(*bn, bench::profile_module(*conv, in, ledger), ledger);
}

BottleneckImpl::BottleneckImpl(int64_t in, int64_t out, torch::ExpandingArray<3> stride) {
    const int64_t mid = std::max<int64_t>(1, out / 2);
    reduce = register_module("reduce", ConvBnAct(in, mid, 1, 1, 1, false));
    spatial = register_module("spatial", ConvBnAct(mid, mid, 3, stride, 1, false));
    expand = register_module("expand", ConvBnAct(mid, out, 1, 1, 1, false, /*activation=*/false));
    const bool strided = (*stride)[0] != 1 || (*stride)[1] != 1 || (*stride)[2] != 1;
    if (strided || in != out) {
        shortcut = register_module("shortcut", ConvBnAct(in, out, 1, stride, 1, false, /*activation=*/false));
    }
}

torch::Tensor BottleneckImpl::forward(const torch::Tensor& x) {
    auto y = expand(spatial(reduce(x)));
    return torch::relu(y + (shortcut ? shortcut(x) : x));
}

bench::Shape BottleneckImpl::profile(const bench::Shape& in, bench::MacLedger& ledger) const {
    auto s = expand->profile(spatial->profile(reduce->profile(in, ledger), ledger), ledger);
    if (shortcut) shortcut->profile(in, ledger);
    return s;
}

InvertedResidualImpl::InvertedResidualImpl(int64_t in, int64_t out, torch::ExpandingArray<3> stride,
                                           int64_t expansion) {
    const int64_t hidden = in * expansion;
    expand = register_module("expand", ConvBnAct(in, hidden, 1, 1, 1, true));
    depthwise = register_module("depthwise", ConvBnAct(hidden, hidden, 3, stride, hidden, true));
    project = register_module("project", ConvBnAct(hidden, out, 1, 1, 1, true, /*activation=*/false));
    residual_ = in == out && (*stride)[0] == 1 && (*stride)[1] == 1 && (*stride)[2] == 1;
}

torch::Tensor InvertedResidualImpl::forward(const torch::Tensor& x) {
    auto y = project(depthwise(expand(x)));
    return residual_ ? y + x : y;
}

bench::Shape InvertedResidualImpl::profile(const bench::Shape& in, bench::MacLedger& ledger) const {
    return project->profile(depthwise->profile(expand->profile(in, ledger), ledger), ledger);
}

// --- backbone -------------------------------------------------------------

namespace {

const std::array<torch::ExpandingArray<3>, kNumStages> kStageStrides = {
    torch::ExpandingArray<3>({1, 1, 1}), torch::ExpandingArray<3>({2, 2, 2}),
    torch::ExpandingArray<3>({2, 2, 2}), torch::ExpandingArray<3>({1, 2, 2})};

constexpr int64_t kStudentExpansion = 4;

}  // namespace

BackboneImpl::BackboneImpl(BackboneConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto& w = config_.widths;
    const bool student = config_.role == Role::kStudent;

    stem = torch::nn::Sequential();
    if (student) {
        stem->push_back(ConvBnAct(3, config_.stem_width, 3, torch::ExpandingArray<3>({1, 2, 2}), 1, true));
        stem->push_back(ConvBnAct(config_.stem_width, config_.stem_width, 3, torch::ExpandingArray<3>({1, 2, 2}),
                                  config_.stem_width, true));
        stem->push_back(ConvBnAct(config_.stem_width, config_.stem_width, 1, 1, 1, true, false));
    } else {
        stem->push_back(ConvBnAct(3, config_.stem_width, 3, torch::ExpandingArray<3>({1, 2, 2}), 1, false));
        stem->push_back(torch::nn::MaxPool3d(
            torch::nn::MaxPool3dOptions({1, 3, 3}).stride({1, 2, 2}).padding({0, 1, 1})));
    }
    register_module("stem", stem);

    int64_t in = config_.stem_width;
    for (int l = 0; l < kNumStages; ++l) {
        stages[l] = torch::nn::Sequential();
        if (student) {
            stages[l]->push_back(InvertedResidual(in, w[l], kStageStrides[l], kStudentExpansion));
            stages[l]->push_back(InvertedResidual(w[l], w[l], 1, kStudentExpansion));
        } else {
            stages[l]->push_back(Bottleneck(in, w[l], kStageStrides[l]));
        }
        register_module("c" + std::to_string(l + 2), stages[l]);
        if (config_.saa_on(l)) {
            attention[l] = register_module("saa_c" + std::to_string(l + 2), saa::Saa());
        }
        in = w[l];
    }
    classifier = register_module("classifier", torch::nn::Linear(in, config_.num_classes));
}

void BackboneImpl::check_input(const torch::Tensor& batch) const {
    if (batch.dim() != 5 || batch.size(4) != 3 || batch.size(1) != config_.input_frames ||
        batch.size(2) != config_.input_height || batch.size(3) != config_.input_width) {
        std::ostringstream msg;
        msg << "backbone input must be (B," << config_.input_frames << "," << config_.input_height << ","
            << config_.input_width << ",3), got " << batch.sizes();
        throw std::invalid_argument(msg.str());
    }
}

StageFeatureSet BackboneImpl::forward_stages(const torch::Tensor& batch) {
    check_input(batch);
    StageFeatureSet out;
    auto x = stem->forward(to_model_input(batch));
    for (int l = 0; l < kNumStages; ++l) {
        x = stages[l]->forward(x);
        if (attention[l]) x = attention[l]->forward(x);
        out.maps[l] = x;
    }
    out.embedding = pool_stage(x);
    out.logits = classifier(out.embedding);
    return out;
}

torch::Tensor BackboneImpl::forward(const torch::Tensor& batch) { return forward_stages(batch).logits; }

bench::Shape BackboneImpl::profile(const bench::Shape& in, bench::MacLedger& ledger) const {
    if (in.size() != 5 || in[4] != 3) throw std::invalid_argument("backbone profile expects (B,T,H,W,3)");
    bench::Shape s = {in[0], 3, in[1], in[2], in[3]};
    s = bench::profile_module(*stem, s, ledger);
    for (int l = 0; l < kNumStages; ++l) {
        s = bench::profile_module(*stages[l], s, ledger);
        if (attention[l]) s = bench::profile_module(*attention[l], s, ledger);
    }
    return bench::profile_module(*classifier, {s[0], s[1]}, ledger);
}

// --- checkpoints ----------------------------------------------------------

namespace {
constexpr const char* kMetaKey = "__meta__";
}

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const torch::nn::Module*>>& parts,
                     const std::string& meta) {
    torch::serialize::OutputArchive archive;
    for (const auto& [prefix, module] : parts) {
        for (const auto& p : module->named_parameters()) archive.write(prefix + p.key(), p.value().detach());
        for (const auto& b : module->named_buffers()) archive.write(prefix + b.key(), b.value(), /*is_buffer=*/true);
    }
    archive.write(kMetaKey, c10::IValue(meta));
    try {
        archive.save_to(path);
    } catch (const c10::Error& e) {
        throw IoError("cannot write checkpoint " + path + ": " + e.what_without_backtrace());
    }
}

namespace {
torch::serialize::InputArchive open_archive(const std::string& path) {
    if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path);
    torch::serialize::InputArchive archive;
    try {
        archive.load_from(path);
    } catch (const c10::Error& e) {
        throw IoError("cannot read checkpoint " + path + ": " + e.what_without_backtrace());
    }
    return archive;
}

std::string meta_of(torch::serialize::InputArchive& archive) {
    c10::IValue meta;
    if (!archive.try_read(kMetaKey, meta) || !meta.isString()) return {};
    return meta.toStringRef();
}
}  // namespace

std::string load_checkpoint(const std::string& path,
                            const std::vector<std::pair<std::string, torch::nn::Module*>>& parts) {
    auto archive = open_archive(path);
    torch::NoGradGuard no_grad;
    for (const auto& [prefix, module] : parts) {
        auto restore = [&](const std::string& name, torch::Tensor& target, bool is_buffer) {
            torch::Tensor value;
            if (!archive.try_read(prefix + name, value, is_buffer)) {
                throw ConfigError(prefix + name, "missing from checkpoint " + path);
            }
            if (!value.sizes().equals(target.sizes())) {
                std::ostringstream msg;
                msg << "shape " << value.sizes() << " in checkpoint, model expects " << target.sizes();
                throw ConfigError(prefix + name, msg.str());
            }
            target.copy_(value);
        };
        for (auto& p : module->named_parameters()) restore(p.key(), p.value(), false);
        for (auto& b : module->named_buffers()) restore(b.key(), b.value(), true);
    }
    return meta_of(archive);
}

std::string read_checkpoint_meta(const std::string& path) {
    auto archive = open_archive(path);
    return meta_of(archive);
}

}  // namespace mavact::nn
