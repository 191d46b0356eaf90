#pragma once

#include <torch/torch.h>

#include <array>
#include <string>
#include <vector>

#include "mavact/datamodel.hpp"
#include "mavact/profile.hpp"
#include "mavact/saa.hpp"

namespace mavact::nn {

enum class Role { kTeacher, kStudent };

std::string_view to_string(Role r);

/// Stage indices 0..3 stand for C2..C5 throughout.
inline constexpr int kNumStages = 4;

struct BackboneConfig {
    Role role = Role::kStudent;
    std::array<int64_t, kNumStages> widths = {16, 24, 48, 96};
    int64_t stem_width = 16;
    int64_t num_classes = kNumActions;
    bool saa_enabled = true;
    std::vector<int> saa_stages = {2, 3};
    // expected (T, H, W) of the network input
    int input_frames = 12;
    int input_height = 128;
    int input_width = 128;

    /// 3-D residual bottleneck network, widths 32/64/128/256.
    static BackboneConfig teacher_default();
    /// 3-D inverted-residual (depthwise separable) network, widths 16/24/48/96, SAA on C4 and C5.
    static BackboneConfig student_default();

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    bool saa_on(int stage) const;
};

/// Outputs of one forward pass.
struct StageFeatureSet {
    std::array<torch::Tensor, kNumStages> maps;  // (B, C_l, T_l, H_l, W_l)
    torch::Tensor embedding;                     // (B, C5): pooled final stage
    torch::Tensor logits;                        // (B, num_classes)
};

/// Global average over (T', H', W'): (B,C,T',H',W') -> (B,C).
torch::Tensor pool_stage(const torch::Tensor& map);

/// uint8 or [0,1] float (B,T,H,W,3) -> float (B,3,T,H,W) in [0,1].
torch::Tensor to_model_input(const torch::Tensor& batch);

/// Exact number of learnable scalars.
int64_t count_params(const torch::nn::Module& module);

/// Conv3d -> BatchNorm3d -> activation.
class ConvBnActImpl : public torch::nn::Module, public bench::MacProfiled {
public:
    ConvBnActImpl(int64_t in, int64_t out, torch::ExpandingArray<3> kernel, torch::ExpandingArray<3> stride,
                  int64_t groups, bool relu6, bool activation = true);
    torch::Tensor forward(const torch::Tensor& x);
    bench::Shape profile(const bench::Shape& in, bench::MacLedger& ledger) const override;

    torch::nn::Conv3d conv{nullptr};
    torch::nn::BatchNorm3d bn{nullptr};

private:
    bool relu6_;
    bool activation_;
};
TORCH_MODULE(ConvBnAct);

/// Teacher block: 1x1 reduce, 3x3x3 (strided), 1x1 expand, projected shortcut.
class BottleneckImpl : public torch::nn::Module, public bench::MacProfiled {
public:
    BottleneckImpl(int64_t in, int64_t out, torch::ExpandingArray<3> stride);
    torch::Tensor forward(const torch::Tensor& x);
    bench::Shape profile(const bench::Shape& in, bench::MacLedger& ledger) const override;

    ConvBnAct reduce{nullptr}, spatial{nullptr}, expand{nullptr}, shortcut{nullptr};
};
TORCH_MODULE(Bottleneck);

/// Student block: 1x1 expand, depthwise 3x3x3 (strided), 1x1 linear project;
/// identity residual when shapes allow.
class InvertedResidualImpl : public torch::nn::Module, public bench::MacProfiled {
public:
    InvertedResidualImpl(int64_t in, int64_t out, torch::ExpandingArray<3> stride, int64_t expansion);
    torch::Tensor forward(const torch::Tensor& x);
    bench::Shape profile(const bench::Shape& in, bench::MacLedger& ledger) const override;

    ConvBnAct expand{nullptr}, depthwise{nullptr}, project{nullptr};

private:
    bool residual_;
};
TORCH_MODULE(InvertedResidual);

/// Stem (spatial /4) followed by four stages; C3..C5 halve the spatial size,
/// C3 and C4 also halve time.
class BackboneImpl : public torch::nn::Module, public bench::MacProfiled {
public:
    explicit BackboneImpl(BackboneConfig config);

    /// `batch` is (B,T,H,W,3) pixels, uint8 or float in [0,1]; (T,H,W) must
    /// match the configured input size.
    StageFeatureSet forward_stages(const torch::Tensor& batch);
    /// Logits only.
    torch::Tensor forward(const torch::Tensor& batch);

    /// `in` is the pixel-batch shape (B,T,H,W,3).
    bench::Shape profile(const bench::Shape& in, bench::MacLedger& ledger) const override;

    const BackboneConfig& config() const { return config_; }
    /// Channel width of each stage's output (= pooled feature dimension).
    std::array<int64_t, kNumStages> stage_dims() const { return config_.widths; }

    torch::nn::Sequential stem{nullptr};
    std::array<torch::nn::Sequential, kNumStages> stages{nullptr, nullptr, nullptr, nullptr};
    std::array<saa::Saa, kNumStages> attention{nullptr, nullptr, nullptr, nullptr};
    torch::nn::Linear classifier{nullptr};

private:
    void check_input(const torch::Tensor& batch) const;

    BackboneConfig config_;
};
TORCH_MODULE(Backbone);

/// Writes named parameters and buffers of each (prefix, module) pair plus a
/// free-form metadata string into one file.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const torch::nn::Module*>>& parts,
                     const std::string& meta);

/// Restores every parameter/buffer of each module from "<prefix><name>".
/// Keys under other prefixes (e.g. "sokd.") are ignored. Missing keys or shape
/// mismatches throw ConfigError; unreadable files throw IoError. Returns the metadata string.
std::string load_checkpoint(const std::string& path,
                            const std::vector<std::pair<std::string, torch::nn::Module*>>& parts);

/// Metadata string of a checkpoint without touching any module.
std::string read_checkpoint_meta(const std::string& path);

}  // namespace mavact::nn
