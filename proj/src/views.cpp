#include "mavact/views.hpp"

#include <stdexcept>

namespace mavact {

ViewParams center_view(int clip_frames, int crop_frames) {
    if (crop_frames < 1 || crop_frames > clip_frames) {
        throw std::invalid_argument("crop length must be in 1..clip length");
    }
    return ViewParams{(clip_frames - crop_frames) / 2, false, 0.0};
}

ViewParams draw_view(std::mt19937_64& rng, int clip_frames, int crop_frames, const AugmentConfig& cfg) {
    if (crop_frames < 1 || crop_frames > clip_frames) {
        throw std::invalid_argument("crop length must be in 1..clip length");
    }
    std::uniform_int_distribution<int> start(0, clip_frames - crop_frames);
    std::bernoulli_distribution coin(0.5);
    std::uniform_real_distribution<double> shift(-1.0, 1.0);
    ViewParams v;
    v.first_frame = start(rng);
    const bool rot = coin(rng);
    const double b = shift(rng);
    v.rotate180 = cfg.rotate && rot;
    v.brightness = cfg.brightness * b;
    return v;
}

torch::Tensor gather_views(const ClipDataset& data, std::span<const std::size_t> indices,
                           std::span<const ViewParams> views, int crop_frames) {
    if (indices.size() != views.size()) throw std::invalid_argument("one view per index required");
    const auto& s = data.shape;
    std::vector<torch::Tensor> clips;
    clips.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& v = views[i];
        if (v.first_frame < 0 || v.first_frame + crop_frames > s.frames) {
            throw std::invalid_argument("view crop exceeds clip length");
        }
        auto px = data.clip(indices[i]);
        auto raw = torch::from_blob(const_cast<std::uint8_t*>(px.data()), {s.frames, s.height, s.width, 3},
                                    torch::kUInt8);
        auto x = raw.narrow(0, v.first_frame, crop_frames).to(torch::kFloat) / 255.0;
        if (v.rotate180) x = x.flip({1, 2});
        if (v.brightness != 0.0) x = (x + v.brightness).clamp(0.0, 1.0);
        clips.push_back(x);
    }
    return torch::stack(clips);
}

torch::Tensor gather_labels(const ClipDataset& data, std::span<const std::size_t> indices) {
    std::vector<int64_t> codes;
    codes.reserve(indices.size());
    for (auto i : indices) codes.push_back(wire_code(data.labels.at(i)));
    return torch::tensor(codes, torch::kLong);
}

}  // namespace mavact
