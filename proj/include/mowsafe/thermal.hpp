#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "mowsafe/errors.hpp"
#include "mowsafe/frame.hpp"

namespace mowsafe {

struct DetectorConfig {
    double delta_c = 5.0;
    int min_hot_pixels = 4;

    friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

// Left/right/up/down at distance one and two.
inline constexpr std::array<Pixel, 8> kNeighborOffsets = {
    Pixel{0, -1}, Pixel{0, 1}, Pixel{0, -2}, Pixel{0, 2}, Pixel{-1, 0}, Pixel{1, 0}, Pixel{-2, 0}, Pixel{2, 0}};

inline void validate_detector(const DetectorConfig& c) {
    if (!(c.delta_c > 0.0)) throw ValidationError("detector.delta_c", "must be > 0");
    if (c.min_hot_pixels < 1) throw ValidationError("detector.min_hot_pixels", "must be >= 1");
}

inline bool is_hot_pixel(const ThermalFrame& frame, Pixel p, double delta_c) {
    const double t = frame[p];
    for (const Pixel& o : kNeighborOffsets) {
        const Pixel n{p.row + o.row, p.col + o.col};
        if (n.in_bounds() && t - frame[n] > delta_c) return true;
    }
    return false;
}

/// Pixels warmer than at least one cardinal neighbour (distance 1 or 2) by
/// strictly more than delta_c. Returned in row-major order.
inline std::vector<Pixel> hot_pixels(const ThermalFrame& frame, const DetectorConfig& config) {
    std::vector<Pixel> out;
    for (int r = 0; r < kFrameRows; ++r) {
        for (int c = 0; c < kFrameCols; ++c) {
            if (is_hot_pixel(frame, {r, c}, config.delta_c)) out.push_back({r, c});
        }
    }
    return out;
}

/// Anchor is the first hot pixel seen; it is dropped as soon as it stops being
/// hot, and `detected` requires both the anchor and enough hot pixels.
struct DetectorState {
    std::optional<Pixel> anchor;
    bool detected = false;

    friend bool operator==(const DetectorState&, const DetectorState&) = default;
};

struct DetectorUpdate {
    DetectorState state;
    bool detected = false;
    std::vector<Pixel> flagged;
};

inline DetectorUpdate update_detector(DetectorState state, const ThermalFrame& frame, const DetectorConfig& config) {
    DetectorUpdate out;
    out.flagged = hot_pixels(frame, config);
    const auto& flagged = out.flagged;
    auto contains = [&](Pixel p) { return std::binary_search(flagged.begin(), flagged.end(), p); };

    if (state.anchor && !contains(*state.anchor)) state.anchor.reset();
    if (!state.anchor && !flagged.empty()) state.anchor = flagged.front();
    state.detected = static_cast<int>(flagged.size()) >= config.min_hot_pixels && state.anchor && contains(*state.anchor);

    out.state = state;
    out.detected = state.detected;
    return out;
}

inline int detection_bit(const DetectorState& state) { return state.detected ? 1 : 0; }

}  // namespace mowsafe
