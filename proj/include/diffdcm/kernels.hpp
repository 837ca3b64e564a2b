#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "diffdcm/error.hpp"
#include "diffdcm/matrix.hpp"

namespace diffdcm {

// Probabilities are clamped at this floor before any log.
inline constexpr double kProbFloor = 1e-12;

// Softmax with max-subtraction, so utilities up to |v| ~ 1e4 neither
// overflow nor underflow to a zero sum.
inline std::vector<double> stable_softmax(const std::vector<double>& v) {
    if (v.empty()) throw invalid_input_error("stable_softmax: empty input");
    double mx = v[0];
    for (double x : v) {
        if (!std::isfinite(x)) throw invalid_input_error("stable_softmax: non-finite input");
        mx = std::max(mx, x);
    }
    std::vector<double> p(v.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        p[k] = std::exp(v[k] - mx);
        sum += p[k];
    }
    for (double& x : p) x /= sum;
    return p;
}

// In-place row softmax: out(i,:) = softmax(in(i,:)). out may alias in.
inline void stable_softmax_rows(const Matrix& in, Matrix& out) {
    if (!out.same_shape(in)) out = Matrix(in.rows(), in.cols());
    const std::size_t l = in.cols();
    for (std::size_t i = 0; i < in.rows(); ++i) {
        const double* vi = in.row(i);
        double* pi = out.row(i);
        double mx = vi[0];
        for (std::size_t k = 0; k < l; ++k) {
            if (!std::isfinite(vi[k]))
                throw numerical_error("stable_softmax: non-finite utility in row " +
                                      std::to_string(i));
            mx = std::max(mx, vi[k]);
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < l; ++k) {
            pi[k] = std::exp(vi[k] - mx);
            sum += pi[k];
        }
        for (std::size_t k = 0; k < l; ++k) pi[k] /= sum;
    }
}

// -sum_k y_k ln(max(p_k, 1e-12)) for a one-hot y.
inline double cross_entropy(const std::vector<double>& y, const std::vector<double>& p) {
    if (y.size() != p.size())
        throw invalid_input_error("cross_entropy: y and p lengths differ");
    double loss = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (y[k] != 0.0) loss -= y[k] * std::log(std::max(p[k], kProbFloor));
    }
    return loss;
}

inline double cross_entropy(std::size_t true_class, const std::vector<double>& p) {
    if (true_class >= p.size())
        throw invalid_input_error("cross_entropy: class index out of range");
    return -std::log(std::max(p[true_class], kProbFloor));
}

// Argmax with ties broken toward the lowest index.
inline std::size_t argmax_lowest(const double* v, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (v[k] > v[best]) best = k;
    return best;
}

inline std::size_t argmax_lowest(const std::vector<double>& v) {
    return argmax_lowest(v.data(), v.size());
}

} // namespace diffdcm
