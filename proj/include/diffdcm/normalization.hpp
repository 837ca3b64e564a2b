#pragma once

#include <cmath>
#include <vector>

namespace diffdcm {

// Default lift applied to values that would otherwise be zero (or below)
// after scaling, so log(x) stays defined.
inline constexpr double kDefaultEpsilon = 1e-4;

// Per-feature min-max record mapping raw values onto [0, 10], with values
// below epsilon lifted to epsilon afterwards. A constant column (max == min)
// maps to the midpoint 5.0.
struct FeatureScale {
    double min = 0.0;
    double max = 0.0;
    double epsilon = kDefaultEpsilon;

    double apply(double raw) const {
        double v = (max > min) ? (raw - min) / (max - min) * 10.0 : 5.0;
        return (v < epsilon) ? epsilon : v;
    }

    // Inverse of apply() up to the epsilon lift. Constant columns recover min.
    double invert(double scaled) const {
        return (max > min) ? min + scaled / 10.0 * (max - min) : min;
    }

    // d(scaled)/d(raw); used to chain sensitivities back to raw units.
    double slope() const { return (max > min) ? 10.0 / (max - min) : 0.0; }
};

} // namespace diffdcm
