#include "mavact/saa.hpp"

#include <stdexcept>

namespace mavact::saa {

namespace F = torch::nn::functional;

void NeighborhoodSpec::validate() const {
    for (int e : {t, h, w}) {
        if (e < 1 || e % 2 == 0) throw std::invalid_argument("neighbourhood extents must be odd and >= 1");
    }
    if (neighbors() < 1) throw std::invalid_argument("neighbourhood must contain at least one neighbour");
}

torch::Tensor similarity_map(const torch::Tensor& x, const NeighborhoodSpec& nbhd) {
    nbhd.validate();
    if (x.dim() != 5) throw std::invalid_argument("similarity_map expects a (B,C,T,H,W) tensor");
    const int64_t rt = nbhd.t / 2, rh = nbhd.h / 2, rw = nbhd.w / 2;
    const int64_t T = x.size(2), H = x.size(3), W = x.size(4);

    // replicate padding is only implemented for floating tensors with spatial dims >= 1
    auto padded = F::pad(x, F::PadFuncOptions({rw, rw, rh, rh, rt, rt}).mode(torch::kReplicate));

    torch::Tensor acc = torch::zeros_like(x);
    for (int64_t dt = 0; dt < nbhd.t; ++dt) {
        for (int64_t dh = 0; dh < nbhd.h; ++dh) {
            for (int64_t dw = 0; dw < nbhd.w; ++dw) {
                if (dt == rt && dh == rh && dw == rw) continue;
                auto neighbour = padded.narrow(2, dt, T).narrow(3, dh, H).narrow(4, dw, W);
                acc = acc + (x - neighbour).square();
            }
        }
    }
    return (acc / static_cast<double>(nbhd.neighbors())).mean(1, /*keepdim=*/true);
}

torch::Tensor attention_weights(const torch::Tensor& s, double eps) {
    if (s.dim() != 5 || s.size(1) != 1) throw std::invalid_argument("attention_weights expects a (B,1,T,H,W) tensor");
    auto var = s.var({2, 3, 4}, /*unbiased=*/false, /*keepdim=*/true);
    return torch::sigmoid(0.25 * (s / (var + eps) - 1.0));
}

torch::Tensor apply_saa(const torch::Tensor& x, const NeighborhoodSpec& nbhd, double eps) {
    return attention_weights(similarity_map(x, nbhd), eps) * x;
}

SaaImpl::SaaImpl(NeighborhoodSpec nbhd, double eps) : nbhd_(nbhd), eps_(eps) { nbhd_.validate(); }

torch::Tensor SaaImpl::forward(const torch::Tensor& x) { return apply_saa(x, nbhd_, eps_); }

}  // namespace mavact::saa
