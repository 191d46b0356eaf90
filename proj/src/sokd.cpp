#include "mavact/sokd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mavact::sokd {

torch::Tensor skew(const torch::Tensor& raw) {
    if (raw.dim() != 2 || raw.size(0) != raw.size(1)) {
        throw std::invalid_argument("skew: expected a square matrix");
    }
    return raw - raw.t();
}

torch::Tensor matrix_exp(const torch::Tensor& w, int order) {
    if (w.dim() != 2 || w.size(0) != w.size(1)) {
        throw std::invalid_argument("matrix_exp: expected a square matrix");
    }
    if (order < 1) throw std::invalid_argument("matrix_exp: series order must be >= 1");
    const auto w_const = w.detach();
    if (w.numel() > 0 && (w_const + w_const.t()).abs().max().item<double>() > 1e-8) {
        throw std::invalid_argument("matrix_exp: input is not skew-symmetric");
    }

    const double norm = w_const.norm().item<double>();
    const int squarings = norm > 1.0 ? static_cast<int>(std::ceil(std::log2(norm))) : 0;
    const auto scaled = squarings > 0 ? w / std::ldexp(1.0, squarings) : w;

    const auto eye = torch::eye(w.size(0), w.options());
    auto result = eye;
    auto term = eye;
    for (int k = 1; k <= order; ++k) {
        term = term.mm(scaled) / static_cast<double>(k);
        result = result + term;
    }
    for (int i = 0; i < squarings; ++i) result = result.mm(result);
    return result;
}

torch::Tensor project(const torch::Tensor& features, const torch::Tensor& projector) {
    if (features.dim() != 2 || projector.dim() != 2 || projector.size(0) != projector.size(1) ||
        features.size(1) != projector.size(0)) {
        throw std::invalid_argument("project: features (B,d) and projector (d,d) do not conform");
    }
    return features.mm(projector);
}

torch::Tensor standardize(const torch::Tensor& z, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("standardize: eps must be positive");
    if (z.dim() != 2) throw std::invalid_argument("standardize: expected (B,d)");
    const auto mean = z.mean(0, /*keepdim=*/true);
    const auto centered = z - mean;
    const auto sigma = centered.square().mean(0, /*keepdim=*/true).sqrt();
    return centered / (sigma + eps);
}

double orthogonality_error(const torch::Tensor& p) {
    const auto pd = p.detach().to(torch::kDouble);
    return (pd.mm(pd.t()) - torch::eye(pd.size(0), pd.options())).norm().item<double>();
}

torch::Tensor sokd_loss(const std::vector<StagePair>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("sokd_loss: no active stages");
    torch::Tensor total;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        if (!p.student.sizes().equals(p.teacher.sizes())) {
            throw std::invalid_argument("sokd_loss: stage " + std::to_string(i) + " shape mismatch");
        }
        auto term = (p.student - p.teacher).square().sum();
        total = total.defined() ? total + term : term;
    }
    return total;
}

StageAdapterImpl::StageAdapterImpl(int64_t in_dim, int64_t out_dim)
    : linear(register_module("linear", torch::nn::Linear(in_dim, out_dim))) {}

torch::Tensor StageAdapterImpl::forward(const torch::Tensor& z) { return linear(z); }

torch::Tensor adapt(const torch::Tensor& z, StageAdapter& adapter) {
    const auto in = adapter->linear->options.in_features();
    if (z.dim() != 2 || z.size(1) != in) {
        throw std::invalid_argument("adapt: expected (B," + std::to_string(in) + ") features");
    }
    return adapter->forward(z);
}

OrthogonalProjectorImpl::OrthogonalProjectorImpl(int64_t dim, int order)
    : raw(register_parameter("raw", torch::zeros({dim, dim}))), order_(order) {}

torch::Tensor OrthogonalProjectorImpl::projector() {
    return matrix_exp(skew(raw.to(torch::kDouble)), order_).to(raw.scalar_type());
}

SokdHeadImpl::SokdHeadImpl(const std::array<int64_t, 4>& student_dims,
                           const std::array<int64_t, 4>& teacher_dims, int order, double eps)
    : eps_(eps) {
    for (int l = 0; l < 4; ++l) {
        const auto tag = std::to_string(l + 2);
        adapters.push_back(register_module("adapter_c" + tag, StageAdapter(student_dims[l], teacher_dims[l])));
        projectors.push_back(register_module("projector_c" + tag, OrthogonalProjector(teacher_dims[l], order)));
    }
}

torch::Tensor SokdHeadImpl::loss(const std::array<torch::Tensor, 4>& student_pooled,
                                 const std::array<torch::Tensor, 4>& teacher_pooled,
                                 const std::vector<int>& stages) {
    std::vector<StagePair> pairs;
    for (int l : stages) {
        if (l < 0 || l > 3) throw std::invalid_argument("stage index must be in 0..3 (C2..C5)");
        auto f = adapt(student_pooled[l], adapters[l]);
        pairs.push_back({project(f, projectors[l]->projector()),
                         standardize(teacher_pooled[l].detach(), eps_)});
    }
    return sokd_loss(pairs);
}

double SokdHeadImpl::max_orthogonality_error() {
    torch::NoGradGuard no_grad;
    double worst = 0.0;
    for (auto& p : projectors) {
        const auto pd = matrix_exp(skew(p->raw.detach().to(torch::kDouble)), p->order());
        worst = std::max(worst, orthogonality_error(pd));
    }
    return worst;
}

}  // namespace mavact::sokd
