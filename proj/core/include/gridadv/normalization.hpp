#pragma once

#include <vector>

namespace gridadv {

/// Affine map of [lo, hi] onto [0, 1]. A degenerate range (hi == lo) maps
/// everything to 0 and back to lo.
struct MinMax {
    double lo = 0.0;
    double hi = 1.0;

    double normalize(double v) const { return hi > lo ? (v - lo) / (hi - lo) : 0.0; }
    double denormalize(double u) const { return hi > lo ? lo + u * (hi - lo) : lo; }

    friend bool operator==(const MinMax&, const MinMax&) = default;
};

/// Per-feature input scaling plus target scaling, fitted on training data.
struct Normalization {
    std::vector<MinMax> features;
    MinMax target;

    friend bool operator==(const Normalization&, const Normalization&) = default;
};

}  // namespace gridadv
