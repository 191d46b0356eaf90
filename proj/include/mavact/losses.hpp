#pragma once

#include <torch/torch.h>

namespace mavact::loss {

/// Coefficients of the combined objective
///   alpha * CE + beta * contrastive + gamma * stage distillation + delta * soft-label KD
/// plus the two temperatures.
struct HybridLossWeights {
    double alpha = 1.0;
    double beta = 0.5;
    double gamma = 1.0;
    double delta = 1.0;
    double tau = 0.07;   // contrastive temperature
    double t_kd = 4.0;   // soft-label temperature

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Row-wise unit-norm scaling.
torch::Tensor l2_normalize(const torch::Tensor& x, double eps = 1e-12);

/// InfoNCE with in-batch negatives: query i's positive is key i, the other
/// B-1 keys are its negatives; similarity is the dot product of the (already
/// normalised) rows. Mean over queries. Requires B >= 2.
torch::Tensor info_nce(const torch::Tensor& queries, const torch::Tensor& keys, double tau);

/// Mean negative log-softmax at the true class. `labels` is an int64 (B) tensor.
torch::Tensor cross_entropy(const torch::Tensor& logits, const torch::Tensor& labels);

/// t^2 * KL(softmax(teacher/t) || softmax(student/t)), averaged over the batch.
torch::Tensor soft_kd(const torch::Tensor& student_logits, const torch::Tensor& teacher_logits, double t_kd);

/// Component values of one objective evaluation.
struct LossComponents {
    double ce = 0.0;
    double con = 0.0;
    double distil = 0.0;
    double kd = 0.0;
};

/// Weighted sum; throws NumericError if any component is NaN or infinite.
double hybrid(const LossComponents& c, const HybridLossWeights& w);
/// Tensor form used during training, with the same finiteness check.
torch::Tensor hybrid(const torch::Tensor& ce, const torch::Tensor& con, const torch::Tensor& distil,
                     const torch::Tensor& kd, const HybridLossWeights& w);

}  // namespace mavact::loss
