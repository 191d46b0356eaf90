#pragma once

#include <torch/torch.h>

namespace mavact::saa {

/// Window (t, h, w) around each voxel, centre excluded, replicate padding at
/// the borders so every voxel sees N = t*h*w - 1 neighbours.
struct NeighborhoodSpec {
    int t = 3;
    int h = 3;
    int w = 3;

    int neighbors() const { return t * h * w - 1; }
    /// Extents must be odd, >= 1, and leave at least one neighbour.
    void validate() const;
};

inline constexpr double kDefaultEpsilon = 1e-5;

/// Mean squared deviation of each voxel from its neighbourhood, computed per
/// channel and averaged over channels: (B,C,T,H,W) -> (B,1,T,H,W).
torch::Tensor similarity_map(const torch::Tensor& x, const NeighborhoodSpec& nbhd = {});

/// sigmoid((S / (var + eps) - 1) / 4) with var the population variance of S
/// over (T,H,W) of each sample. Result lies in (0,1).
torch::Tensor attention_weights(const torch::Tensor& s, double eps = kDefaultEpsilon);

/// X' = W * X with W broadcast over channels.
torch::Tensor apply_saa(const torch::Tensor& x, const NeighborhoodSpec& nbhd = {},
                        double eps = kDefaultEpsilon);

/// Parameter-free module wrapper used inside the backbones.
class SaaImpl : public torch::nn::Module {
public:
    explicit SaaImpl(NeighborhoodSpec nbhd = {}, double eps = kDefaultEpsilon);
    torch::Tensor forward(const torch::Tensor& x);

    const NeighborhoodSpec& neighborhood() const { return nbhd_; }

private:
    NeighborhoodSpec nbhd_;
    double eps_;
};
TORCH_MODULE(Saa);

}  // namespace mavact::saa
