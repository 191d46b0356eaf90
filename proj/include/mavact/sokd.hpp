#pragma once

#include <torch/torch.h>

#include <array>
#include <vector>

namespace mavact::sokd {

inline constexpr int kDefaultTaylorOrder = 12;
inline constexpr double kDefaultStandardizeEps = 1e-5;

/// W = R - R^T. Throws std::invalid_argument for non-square input.
torch::Tensor skew(const torch::Tensor& raw);

/// exp(W) for skew-symmetric W by a truncated Taylor series of the given
/// order. When ||W||_F > 1 the argument is scaled by 2^-s to unit norm and the
/// result squared s times. Differentiable through autograd.
/// Throws std::invalid_argument if W deviates from skew symmetry by more than 1e-8.
torch::Tensor matrix_exp(const torch::Tensor& w, int order = kDefaultTaylorOrder);

/// Row-wise F * P.
torch::Tensor project(const torch::Tensor& features, const torch::Tensor& projector);

/// Column-wise (over the batch) (Z - mean) / (population std + eps).
torch::Tensor standardize(const torch::Tensor& z, double eps = kDefaultStandardizeEps);

/// ||P P^T - I||_F.
double orthogonality_error(const torch::Tensor& p);

/// One stage's aligned pair: projected student features and standardized
/// teacher features, both (B, d_l).
struct StagePair {
    torch::Tensor student;
    torch::Tensor teacher;
};

/// Sum over stages of the squared Frobenius distance.
torch::Tensor sokd_loss(const std::vector<StagePair>& pairs);

/// Learnable affine map R^{d_s} -> R^{d_t} applied to pooled student features.
class StageAdapterImpl : public torch::nn::Module {
public:
    StageAdapterImpl(int64_t in_dim, int64_t out_dim);
    torch::Tensor forward(const torch::Tensor& z);

    torch::nn::Linear linear{nullptr};
};
TORCH_MODULE(StageAdapter);

/// Holds the raw square parameter R; the projector is exp(R - R^T).
/// R starts at zero, so the projector starts as the identity.
class OrthogonalProjectorImpl : public torch::nn::Module {
public:
    explicit OrthogonalProjectorImpl(int64_t dim, int order = kDefaultTaylorOrder);
    /// Projector in the parameter's dtype; the exponential itself runs in 64-bit.
    torch::Tensor projector();
    int order() const { return order_; }

    torch::Tensor raw;

private:
    int order_;
};
TORCH_MODULE(OrthogonalProjector);

/// adapt(Z) -> F, with a dimension check.
torch::Tensor adapt(const torch::Tensor& z, StageAdapter& adapter);

/// Adapters and projectors for all four stages C2..C5. Lives in the student
/// checkpoint under the "sokd." namespace.
class SokdHeadImpl : public torch::nn::Module {
public:
    SokdHeadImpl(const std::array<int64_t, 4>& student_dims, const std::array<int64_t, 4>& teacher_dims,
                 int order = kDefaultTaylorOrder, double eps = kDefaultStandardizeEps);

    /// Pooled stage vectors in, loss over `stages` (indices 0..3 = C2..C5) out.
    torch::Tensor loss(const std::array<torch::Tensor, 4>& student_pooled,
                       const std::array<torch::Tensor, 4>& teacher_pooled, const std::vector<int>& stages);

    /// max over stages of ||P P^T - I||_F, recomputed from the raw parameters in 64-bit.
    double max_orthogonality_error();

    std::vector<StageAdapter> adapters;
    std::vector<OrthogonalProjector> projectors;

private:
    double eps_;
};
TORCH_MODULE(SokdHead);

}  // namespace mavact::sokd
