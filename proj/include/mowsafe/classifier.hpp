#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stop_token>
#include <string_view>
#include <vector>

#include "mowsafe/errors.hpp"
#include "mowsafe/frame.hpp"
#include "mowsafe/thermal.hpp"
#include "mowsafe/world.hpp"

namespace mowsafe {

enum class Label { hedgehog, hedgehog_with_cubs, snake, wounded_animal, other_warm, none };

inline constexpr std::array<Label, 6> kAllLabels = {Label::hedgehog,       Label::hedgehog_with_cubs, Label::snake,
                                                    Label::wounded_animal, Label::other_warm,         Label::none};

inline std::string_view to_string(Label l) {
    switch (l) {
        case Label::hedgehog: return "hedgehog";
        case Label::hedgehog_with_cubs: return "hedgehog_with_cubs";
        case Label::snake: return "snake";
        case Label::wounded_animal: return "wounded_animal";
        case Label::other_warm: return "other_warm";
        case Label::none: return "none";
    }
    return "none";
}

inline Label label_for_kind(EntityKind k) {
    switch (k) {
        case EntityKind::hedgehog: return Label::hedgehog;
        case EntityKind::hedgehog_family: return Label::hedgehog_with_cubs;
        case EntityKind::snake: return Label::snake;
        case EntityKind::wounded_animal: return Label::wounded_animal;
        default: return Label::other_warm;
    }
}

struct VisibleEntity {
    EntityKind kind = EntityKind::generic_warm;
    double fraction = 0.0;  // share of the entity inside the field of view
    std::size_t order = 0;  // position in the scenario's entity list
    friend bool operator==(const VisibleEntity&, const VisibleEntity&) = default;
};

// A single still frame; a classification task never looks at anything else.
struct Snapshot {
    ThermalFrame thermal;
    std::vector<VisibleEntity> visible_truth;
    std::uint64_t taken_at_tick = 0;
    bool night = false;
    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct ClassificationResult {
    Label label = Label::none;
    double confidence = 0.0;
    friend bool operator==(const ClassificationResult&, const ClassificationResult&) = default;
};

// Accepts a blob when every feature lies inside the band. The aspect test
// also accepts the reciprocal, so a band describes elongation regardless of
// orientation.
struct BlobBand {
    int min_area = 1;
    int max_area = static_cast<int>(kFramePixels);
    double min_aspect = 0.0;
    double max_aspect = 1e9;
    double min_excess_c = 0.0;
    double max_excess_c = 1e9;

    friend bool operator==(const BlobBand&, const BlobBand&) = default;
};

struct BlobThresholds {
    BlobBand hedgehog{8, 40, 0.5, 2.0, 8.0, 40.0};
    BlobBand family{41, 400, 0.5, 3.0, 8.0, 40.0};
    BlobBand snake{3, 80, 3.0, 32.0, 2.0, 40.0};

    friend bool operator==(const BlobThresholds&, const BlobThresholds&) = default;
};

enum class ClassifierKind { oracle, blob_feature };

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::oracle;
    double accuracy = 1.0;
    double night_accuracy = 1.0;
    std::uint64_t confusion_seed = 0;
    BlobThresholds blob;
    DetectorConfig detector;  // hot-pixel rule used by blob_feature
    std::uint32_t init_latency_ticks = 90;

    friend bool operator==(const ClassifierSpec&, const ClassifierSpec&) = default;
};

inline void validate_classifier(const ClassifierSpec& s) {
    if (!(s.accuracy >= 0.0 && s.accuracy <= 1.0)) throw ValidationError("classifier.accuracy", "must be in [0, 1]");
    if (!(s.night_accuracy >= 0.0 && s.night_accuracy <= 1.0))
        throw ValidationError("classifier.night_accuracy", "must be in [0, 1]");
    validate_detector(s.detector);
}

// ---------------------------------------------------------------------------
// Blob features
// ---------------------------------------------------------------------------

struct BlobFeatures {
    int area = 0;
    double aspect = 0.0;  // bounding-box width / height
    double mean_excess_c = 0.0;
};

inline double frame_median(const ThermalFrame& frame) {
    std::vector<double> v(frame.values().begin(), frame.values().end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + mid);
    return (lower + upper) / 2.0;
}

// Largest 4-connected component of `flagged` (row-major sorted). Ties go to
// the component found first in raster order.
inline std::vector<Pixel> largest_component(const std::vector<Pixel>& flagged) {
    std::array<std::uint8_t, kFramePixels> mask{};
    for (const Pixel& p : flagged) mask[p.index()] = 1;
    std::array<std::uint8_t, kFramePixels> seen{};
    std::vector<Pixel> best;
    std::vector<Pixel> stack;
    for (const Pixel& seed : flagged) {
        if (seen[seed.index()]) continue;
        std::vector<Pixel> comp;
        stack.assign(1, seed);
        seen[seed.index()] = 1;
        while (!stack.empty()) {
            const Pixel p = stack.back();
            stack.pop_back();
            comp.push_back(p);
            for (const Pixel o : {Pixel{-1, 0}, Pixel{1, 0}, Pixel{0, -1}, Pixel{0, 1}}) {
                const Pixel n{p.row + o.row, p.col + o.col};
                if (n.in_bounds() && mask[n.index()] && !seen[n.index()]) {
                    seen[n.index()] = 1;
                    stack.push_back(n);
                }
            }
        }
        if (comp.size() > best.size()) best = std::move(comp);
    }
    std::sort(best.begin(), best.end());
    return best;
}

/// Area, aspect and mean excess over the frame median of the largest
/// connected hot-pixel blob.
inline BlobFeatures blob_features(const ThermalFrame& frame, const DetectorConfig& config) {
    const auto flagged = hot_pixels(frame, config);
    if (flagged.empty()) throw ContractViolation("blob_features needs at least one hot pixel");
    const auto comp = largest_component(flagged);
    int r0 = kFrameRows, r1 = -1, c0 = kFrameCols, c1 = -1;
    const double median = frame_median(frame);
    double excess = 0.0;
    for (const Pixel& p : comp) {
        r0 = std::min(r0, p.row);
        r1 = std::max(r1, p.row);
        c0 = std::min(c0, p.col);
        c1 = std::max(c1, p.col);
        excess += frame[p] - median;
    }
    return {static_cast<int>(comp.size()), static_cast<double>(c1 - c0 + 1) / static_cast<double>(r1 - r0 + 1),
            excess / static_cast<double>(comp.size())};
}

inline bool band_matches(const BlobBand& b, const BlobFeatures& f) {
    const bool aspect_ok = (f.aspect >= b.min_aspect && f.aspect <= b.max_aspect) ||
                           (1.0 / f.aspect >= b.min_aspect && 1.0 / f.aspect <= b.max_aspect);
    return f.area >= b.min_area && f.area <= b.max_area && aspect_ok && f.mean_excess_c >= b.min_excess_c &&
           f.mean_excess_c <= b.max_excess_c;
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Kind with the largest in-view fraction; ties go to the earlier entity.
inline std::optional<EntityKind> dominant_visible_kind(const std::vector<VisibleEntity>& visible) {
    const VisibleEntity* best = nullptr;
    for (const auto& v : visible) {
        if (!best || v.fraction > best->fraction || (v.fraction == best->fraction && v.order < best->order)) best = &v;
    }
    if (!best) return std::nullopt;
    return best->kind;
}

inline Label true_label(const Snapshot& snap) {
    const auto k = dominant_visible_kind(snap.visible_truth);
    return k ? label_for_kind(*k) : Label::none;
}

/// Labels one snapshot. Returns nothing if `stop` was requested before the
/// result was produced.
inline std::optional<ClassificationResult> classify(const ClassifierSpec& spec, const Snapshot& snapshot,
                                                    std::mt19937_64& rng, std::stop_token stop = {}) {
    if (stop.stop_requested()) return std::nullopt;

    if (spec.kind == ClassifierKind::oracle) {
        const Label truth = true_label(snapshot);
        const double p = snapshot.night ? spec.night_accuracy : spec.accuracy;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const bool correct = u(rng) < p;
        if (stop.stop_requested()) return std::nullopt;
        if (correct) return ClassificationResult{truth, p};
        std::vector<Label> others;
        for (Label l : kAllLabels) {
            if (l != truth) others.push_back(l);
        }
        std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
        return ClassificationResult{others[pick(rng)], p};
    }

    const auto flagged = hot_pixels(snapshot.thermal, spec.detector);
    if (flagged.empty()) return ClassificationResult{Label::none, 1.0};
    if (stop.stop_requested()) return std::nullopt;
    const BlobFeatures f = blob_features(snapshot.thermal, spec.detector);
    if (stop.stop_requested()) return std::nullopt;
    if (band_matches(spec.blob.hedgehog, f)) return ClassificationResult{Label::hedgehog, 1.0};
    if (band_matches(spec.blob.family, f)) return ClassificationResult{Label::hedgehog_with_cubs, 1.0};
    if (band_matches(spec.blob.snake, f)) return ClassificationResult{Label::snake, 1.0};
    return ClassificationResult{Label::other_warm, 0.5};
}

}  // namespace mowsafe
