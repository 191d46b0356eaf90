#include "mavact/profile.hpp"

#include <functional>
#include <numeric>
#include <stdexcept>

#include "mavact/errors.hpp"
#include "mavact/saa.hpp"

namespace mavact::bench {
namespace {

std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + ")";
}

int64_t product(const Shape& s, std::size_t from = 0) {
    return std::accumulate(s.begin() + static_cast<std::ptrdiff_t>(from), s.end(), int64_t{1},
                           std::multiplies<>());
}

template <std::size_t D, typename Options>
Shape conv_shape(const Options& o, const Shape& in, MacLedger& ledger, const std::string& name) {
    if (in.size() != D + 2 || in[1] != o.in_channels()) {
        throw std::invalid_argument(name + ": input " + shape_str(in) + " does not fit convolution");
    }
    const auto& pad = std::get<torch::ExpandingArray<D>>(o.padding());
    Shape out = {in[0], o.out_channels()};
    for (std::size_t d = 0; d < D; ++d) {
        out.push_back(conv_output_length(in[d + 2], (*o.kernel_size())[d], (*o.stride())[d], (*pad)[d],
                                         (*o.dilation())[d]));
    }
    const int64_t kernel = product(Shape(o.kernel_size()->begin(), o.kernel_size()->end()));
    ledger.add(name, o.out_channels() * (o.in_channels() / o.groups()) * kernel * product(out, 2) * out[0]);
    return out;
}

template <std::size_t D, typename Options>
Shape pool_shape(const Options& o, const Shape& in) {
    Shape out(in.begin(), in.begin() + 2);
    for (std::size_t d = 0; d < D; ++d) {
        out.push_back(conv_output_length(in[d + 2], (*o.kernel_size())[d], (*o.stride())[d],
                                         (*o.padding())[d]));
    }
    return out;
}

}  // namespace

int64_t conv_output_length(int64_t in, int64_t kernel, int64_t stride, int64_t padding, int64_t dilation) {
    return (in + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1;
}

Shape profile_module(const torch::nn::Module& module, const Shape& in, MacLedger& ledger) {
    const auto& name = module.name();

    if (const auto* p = dynamic_cast<const MacProfiled*>(&module)) return p->profile(in, ledger);

    if (const auto* seq = dynamic_cast<const torch::nn::SequentialImpl*>(&module)) {
        Shape s = in;
        for (const auto& child : seq->children()) s = profile_module(*child, s, ledger);
        return s;
    }
    if (const auto* c = dynamic_cast<const torch::nn::Conv3dImpl*>(&module)) {
        return conv_shape<3>(c->options, in, ledger, name);
    }
    if (const auto* c = dynamic_cast<const torch::nn::Conv2dImpl*>(&module)) {
        return conv_shape<2>(c->options, in, ledger, name);
    }
    if (const auto* c = dynamic_cast<const torch::nn::Conv1dImpl*>(&module)) {
        return conv_shape<1>(c->options, in, ledger, name);
    }
    if (const auto* l = dynamic_cast<const torch::nn::LinearImpl*>(&module)) {
        if (in.empty() || in.back() != l->options.in_features()) {
            throw std::invalid_argument(name + ": input " + shape_str(in) + " does not fit linear layer");
        }
        Shape out = in;
        out.back() = l->options.out_features();
        ledger.add(name, l->options.in_features() * l->options.out_features() * product(in) / in.back());
        return out;
    }
    if (const auto* m = dynamic_cast<const torch::nn::MaxPool3dImpl*>(&module)) return pool_shape<3>(m->options, in);
    if (const auto* m = dynamic_cast<const torch::nn::MaxPool2dImpl*>(&module)) return pool_shape<2>(m->options, in);
    if (const auto* m = dynamic_cast<const torch::nn::AvgPool3dImpl*>(&module)) return pool_shape<3>(m->options, in);
    if (const auto* m = dynamic_cast<const torch::nn::AvgPool2dImpl*>(&module)) return pool_shape<2>(m->options, in);
    if (dynamic_cast<const torch::nn::FlattenImpl*>(&module)) {
        return {in[0], product(in, 1)};
    }
    if (dynamic_cast<const torch::nn::BatchNorm1dImpl*>(&module) ||
        dynamic_cast<const torch::nn::BatchNorm2dImpl*>(&module) ||
        dynamic_cast<const torch::nn::BatchNorm3dImpl*>(&module) ||
        dynamic_cast<const torch::nn::ReLUImpl*>(&module) || dynamic_cast<const torch::nn::ReLU6Impl*>(&module) ||
        dynamic_cast<const torch::nn::SigmoidImpl*>(&module) ||
        dynamic_cast<const torch::nn::IdentityImpl*>(&module) ||
        dynamic_cast<const torch::nn::DropoutImpl*>(&module) || dynamic_cast<const saa::SaaImpl*>(&module)) {
        return in;
    }
    throw UnsupportedLayerError("no MAC model for layer kind '" + name + "'");
}

}  // namespace mavact::bench
