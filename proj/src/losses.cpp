#include "mavact/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mavact/errors.hpp"

namespace mavact::loss {

void HybridLossWeights::validate() const {
    const std::pair<const char*, double> weights[] = {
        {"alpha", alpha}, {"beta", beta}, {"gamma", gamma}, {"delta", delta}};
    for (const auto& [name, v] : weights) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be >= 0");
    }
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
    if (!(t_kd >= 1.0)) throw std::invalid_argument("t_kd must be >= 1");
}

torch::Tensor l2_normalize(const torch::Tensor& x, double eps) {
    return x / x.square().sum(1, /*keepdim=*/true).sqrt().clamp_min(eps);
}

torch::Tensor info_nce(const torch::Tensor& queries, const torch::Tensor& keys, double tau) {
    if (queries.dim() != 2 || !queries.sizes().equals(keys.sizes())) {
        throw std::invalid_argument("info_nce: queries and keys must both be (B,E)");
    }
    if (queries.size(0) < 2) throw std::invalid_argument("info_nce: need B >= 2 for in-batch negatives");
    if (!(tau > 0.0)) throw std::invalid_argument("info_nce: tau must be > 0");
    const auto logits = queries.mm(keys.t()) / tau;
    return (torch::logsumexp(logits, 1) - logits.diagonal()).mean();
}

torch::Tensor cross_entropy(const torch::Tensor& logits, const torch::Tensor& labels) {
    if (logits.dim() != 2 || labels.dim() != 1 || labels.size(0) != logits.size(0)) {
        throw std::invalid_argument("cross_entropy: expected logits (B,C) and labels (B)");
    }
    const auto lab = labels.to(torch::kLong);
    if (lab.numel() > 0 && (lab.min().item<int64_t>() < 0 || lab.max().item<int64_t>() >= logits.size(1))) {
        throw std::invalid_argument("cross_entropy: label out of range");
    }
    const auto picked = logits.gather(1, lab.unsqueeze(1)).squeeze(1);
    return (torch::logsumexp(logits, 1) - picked).mean();
}

torch::Tensor soft_kd(const torch::Tensor& student_logits, const torch::Tensor& teacher_logits, double t_kd) {
    if (!student_logits.sizes().equals(teacher_logits.sizes()) || student_logits.dim() != 2) {
        throw std::invalid_argument("soft_kd: logits shapes differ");
    }
    if (!(t_kd > 0.0)) throw std::invalid_argument("soft_kd: temperature must be > 0");
    const auto log_t = torch::log_softmax(teacher_logits / t_kd, 1);
    const auto log_s = torch::log_softmax(student_logits / t_kd, 1);
    const auto kl = (log_t.exp() * (log_t - log_s)).sum(1);
    return t_kd * t_kd * kl.mean();
}

double hybrid(const LossComponents& c, const HybridLossWeights& w) {
    for (double v : {c.ce, c.con, c.distil, c.kd}) {
        if (!std::isfinite(v)) throw NumericError("hybrid loss: non-finite component");
    }
    return w.alpha * c.ce + w.beta * c.con + w.gamma * c.distil + w.delta * c.kd;
}

torch::Tensor hybrid(const torch::Tensor& ce, const torch::Tensor& con, const torch::Tensor& distil,
                     const torch::Tensor& kd, const HybridLossWeights& w) {
    for (const auto* t : {&ce, &con, &distil, &kd}) {
        if (!torch::isfinite(*t).all().item<bool>()) throw NumericError("hybrid loss: non-finite component");
    }
    return w.alpha * ce + w.beta * con + w.gamma * distil + w.delta * kd;
}

}  // namespace mavact::loss
