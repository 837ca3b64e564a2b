#pragma once

#include <cmath>
#include <functional>

#include "diffdcm/error.hpp"
#include "diffdcm/matrix.hpp"

namespace diffdcm {

// Central-difference gradient of a scalar function of a matrix. This is the
// independent oracle the analytic backward passes are checked against; it
// must never share code with them.
inline Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f,
                                         const Matrix& theta, double h = 1e-5) {
    Matrix grad(theta.rows(), theta.cols());
    Matrix probe = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double orig = probe.raw()[i];
        probe.raw()[i] = orig + h;
        const double fp = f(probe);
        probe.raw()[i] = orig - h;
        const double fm = f(probe);
        probe.raw()[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw numerical_error("finite_difference_gradient: non-finite function value");
        grad.raw()[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

// |a-b| <= max(abs_floor, rel*max(|a|,|b|)), the comparison used by every
// gradient check in the test suites.
inline bool close_rel(double a, double b, double rel, double abs_floor) {
    const double diff = std::abs(a - b);
    const double scale = std::max(std::abs(a), std::abs(b));
    return diff <= std::max(abs_floor, rel * scale);
}

inline bool all_close_rel(const Matrix& a, const Matrix& b, double rel, double abs_floor) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!close_rel(a.raw()[i], b.raw()[i], rel, abs_floor)) return false;
    return true;
}

} // namespace diffdcm
