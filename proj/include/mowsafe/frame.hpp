#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <span>
#include <string>

#include "mowsafe/errors.hpp"

namespace mowsafe {

inline constexpr int kFrameRows = 24;
inline constexpr int kFrameCols = 32;
inline constexpr std::size_t kFramePixels = kFrameRows * kFrameCols;

// Ordering is row-major, so std::min over a set of pixels yields the first
// pixel a raster scan would visit.
struct Pixel {
    int row = 0;
    int col = 0;

    constexpr bool in_bounds() const { return row >= 0 && row < kFrameRows && col >= 0 && col < kFrameCols; }
    constexpr std::size_t index() const { return static_cast<std::size_t>(row) * kFrameCols + col; }

    friend constexpr auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// One 32x24 thermal image in degrees Celsius, stored row-major (row 0 at the top).
class ThermalFrame {
public:
    ThermalFrame() = default;
    explicit ThermalFrame(double fill) { values_.fill(fill); }

    /// Throws ParseError unless `values` holds exactly 768 finite numbers.
    static ThermalFrame from_values(std::span<const double> values) {
        if (values.size() != kFramePixels) {
            throw ParseError("thermal frame needs " + std::to_string(kFramePixels) + " values, got " +
                             std::to_string(values.size()));
        }
        ThermalFrame f;
        for (std::size_t i = 0; i < kFramePixels; ++i) {
            if (!std::isfinite(values[i])) throw ParseError("thermal frame value " + std::to_string(i) + " is not finite");
            f.values_[i] = values[i];
        }
        return f;
    }

    double& at(int row, int col) { return values_[Pixel{row, col}.index()]; }
    double at(int row, int col) const { return values_[Pixel{row, col}.index()]; }
    double& operator[](Pixel p) { return values_[p.index()]; }
    double operator[](Pixel p) const { return values_[p.index()]; }

    std::span<const double, kFramePixels> values() const { return values_; }
    std::span<double, kFramePixels> values() { return values_; }

    friend bool operator==(const ThermalFrame&, const ThermalFrame&) = default;

private:
    std::array<double, kFramePixels> values_{};
};

}  // namespace mowsafe
