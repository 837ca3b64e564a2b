#pragma once

#include <cmath>
#include <cstdint>

#include "diffdcm/matrix.hpp"

namespace diffdcm {

// Per-parameter Adam moments. Canonical constants beta1=0.9, beta2=0.999,
// eps=1e-8.
struct AdamState {
    Matrix m;
    Matrix v;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(std::size_t rows = 0, std::size_t cols = 0)
        : m(rows, cols, 0.0), v(rows, cols, 0.0) {}
};

// One bias-corrected Adam update. Weight decay enters as an L2 term added to
// the gradient (g <- g + lambda*theta) before the moment updates, and applies
// to every parameter it is used on.
inline void adam_step(Matrix& theta, const Matrix& grad, AdamState& state, double lr,
                      double weight_decay = 0.0) {
    require_same_shape(theta, grad, "adam_step");
    if (state.m.empty()) state = AdamState(theta.rows(), theta.cols());
    require_same_shape(theta, state.m, "adam_step(state)");
    if (lr <= 0.0) throw invalid_input_error("adam_step: lr must be > 0");
    if (weight_decay < 0.0) throw invalid_input_error("adam_step: weight_decay must be >= 0");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    double* th = theta.data();
    const double* g = grad.data();
    double* m = state.m.data();
    double* v = state.v.data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double gi = g[i] + weight_decay * th[i];
        m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
        v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        th[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    require_all_finite(theta, "adam_step");
}

} // namespace diffdcm
