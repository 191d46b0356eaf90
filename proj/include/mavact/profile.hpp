#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mavact::bench {

using Shape = std::vector<int64_t>;

/// Running tally of multiply-accumulates, one entry per costed layer.
class MacLedger {
public:
    void add(std::string layer, int64_t macs) {
        total_ += macs;
        entries_.emplace_back(std::move(layer), macs);
    }
    int64_t total() const { return total_; }
    const std::vector<std::pair<std::string, int64_t>>& entries() const { return entries_; }

private:
    int64_t total_ = 0;
    std::vector<std::pair<std::string, int64_t>> entries_;
};

/// Composite modules describe their own dataflow to the MAC counter by
/// propagating a shape through their children in forward order.
class MacProfiled {
public:
    virtual ~MacProfiled() = default;
    virtual Shape profile(const Shape& in, MacLedger& ledger) const = 0;
};

/// Output shape of `module` applied to `in`, charging its MACs to `ledger`.
///   convolution  (C_out * C_in / groups) * prod(kernel) * prod(output positions) * batch
///   linear       in * out * leading positions
///   normalisation, activations, pooling, dropout, flatten, SAA: 0
/// Sequential containers recurse; MacProfiled modules delegate to profile().
/// Anything else throws UnsupportedLayerError.
Shape profile_module(const torch::nn::Module& module, const Shape& in, MacLedger& ledger);

/// Standard convolution output length along one axis.
int64_t conv_output_length(int64_t in, int64_t kernel, int64_t stride, int64_t padding, int64_t dilation = 1);

}  // namespace mavact::bench
