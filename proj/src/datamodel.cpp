#include "mavact/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mavact/errors.hpp"

namespace mavact {

ActionLabel action_from_code(std::uint8_t code) {
    if (code >= kNumActions) {
        throw std::invalid_argument("action wire code out of range: " + std::to_string(code));
    }
    return static_cast<ActionLabel>(code);
}

std::string_view to_string(ActionLabel a) {
    switch (a) {
        case ActionLabel::kStart: return "start";
        case ActionLabel::kEnd: return "end";
        case ActionLabel::kOne: return "one";
        case ActionLabel::kZero: return "zero";
    }
    return "?";
}

std::string_view to_string(ScaleTag s) {
    switch (s) {
        case ScaleTag::kShort: return "short";
        case ScaleTag::kMedium: return "medium";
        case ScaleTag::kLong: return "long";
    }
    return "?";
}

ScaleTag scale_from_string(std::string_view s) {
    if (s == "short") return ScaleTag::kShort;
    if (s == "medium") return ScaleTag::kMedium;
    if (s == "long") return ScaleTag::kLong;
    throw std::invalid_argument("unknown scale tag: " + std::string(s));
}

void ClipDataset::append(const LabeledClip& c) {
    if (!(c.shape == shape)) {
        throw std::invalid_argument("clip shape differs from dataset shape");
    }
    if (c.frames.size() != shape.voxels()) {
        throw std::invalid_argument("clip pixel buffer has wrong size");
    }
    pixels.insert(pixels.end(), c.frames.begin(), c.frames.end());
    labels.push_back(c.label);
}

LabeledClip ClipDataset::get(std::size_t i) const {
    if (i >= size()) throw std::out_of_range("clip index out of range");
    auto px = clip(i);
    return LabeledClip{shape, {px.begin(), px.end()}, labels[i], scale};
}

std::array<std::size_t, kNumActions> ClipDataset::label_histogram() const {
    std::array<std::size_t, kNumActions> h{};
    for (auto l : labels) ++h[wire_code(l)];
    return h;
}

void SplitSpec::validate() const {
    if (den <= 0 || num <= 0 || num >= den) {
        throw std::invalid_argument("train fraction must lie strictly between 0 and 1");
    }
}

Split split_dataset(std::span<const ActionLabel> labels, const SplitSpec& spec) {
    spec.validate();
    const auto n = static_cast<std::int64_t>(labels.size());
    if (n == 0) throw std::invalid_argument("cannot split an empty dataset");

    // round half up of num*n/den, in integers
    const std::int64_t train_total = (2 * spec.num * n + spec.den) / (2 * spec.den);
    if (train_total == 0 || train_total == n) {
        throw StratificationError("split of " + std::to_string(n) +
                                  " clips leaves one side empty");
    }

    std::mt19937_64 rng(spec.seed);
    std::array<std::vector<std::size_t>, kNumActions> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[wire_code(labels[i])].push_back(i);
    for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng);

    // Largest-remainder apportionment; equal remainders are ordered by a seeded
    // permutation of the classes so no class is systematically favoured.
    std::array<std::int64_t, kNumActions> quota{};
    std::array<std::int64_t, kNumActions> remainder{};
    std::int64_t assigned = 0;
    for (int c = 0; c < kNumActions; ++c) {
        const auto nc = static_cast<std::int64_t>(by_class[c].size());
        quota[c] = spec.num * nc / spec.den;
        remainder[c] = spec.num * nc % spec.den;
        assigned += quota[c];
    }
    std::array<int, kNumActions> order{};
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (std::int64_t extra = train_total - assigned, k = 0; extra > 0; --extra, ++k) {
        quota[order[k]] += 1;
    }

    Split out;
    for (int c = 0; c < kNumActions; ++c) {
        const auto& members = by_class[c];
        out.train.insert(out.train.end(), members.begin(), members.begin() + quota[c]);
        out.test.insert(out.test.end(), members.begin() + quota[c], members.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

Split split_dataset(const ClipDataset& data, const SplitSpec& spec) {
    return split_dataset(std::span<const ActionLabel>(data.labels), spec);
}

TrialReport summarize_trials(std::span<const double> accuracies) {
    if (accuracies.empty()) throw std::invalid_argument("no trial accuracies to summarize");
    TrialReport r;
    r.accuracies.assign(accuracies.begin(), accuracies.end());
    const double n = static_cast<double>(accuracies.size());
    r.mean = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : accuracies) ss += (a - r.mean) * (a - r.mean);
    r.std = std::sqrt(ss / n);
    return r;
}

}  // namespace mavact
