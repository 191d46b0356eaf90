#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <random>
#include <span>

#include "mavact/datamodel.hpp"

namespace mavact {

/// How one augmented view is cut from a clip.
struct ViewParams {
    int first_frame = 0;
    bool rotate180 = false;   // point reflection; keeps rotation sense, unlike a mirror flip
    double brightness = 0.0;  // additive, in [0,1] intensity units
};

struct AugmentConfig {
    bool rotate = true;
    double brightness = 0.1;  // max |shift|
};

/// Centred temporal crop, no photometric change.
ViewParams center_view(int clip_frames, int crop_frames);

/// Random crop start, rotation coin and brightness shift. Always consumes the
/// same number of draws from `rng`, whatever `cfg` enables.
ViewParams draw_view(std::mt19937_64& rng, int clip_frames, int crop_frames, const AugmentConfig& cfg);

/// Float (B, crop, H, W, 3) batch in [0,1] built from the selected clips.
torch::Tensor gather_views(const ClipDataset& data, std::span<const std::size_t> indices,
                           std::span<const ViewParams> views, int crop_frames);

/// int64 (B) tensor of wire codes.
torch::Tensor gather_labels(const ClipDataset& data, std::span<const std::size_t> indices);

}  // namespace mavact
