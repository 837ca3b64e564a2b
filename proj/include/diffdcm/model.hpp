#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffdcm/error.hpp"
#include "diffdcm/kernels.hpp"
#include "diffdcm/matrix.hpp"
#include "diffdcm/normalization.hpp"
#include "diffdcm/rng.hpp"

namespace diffdcm {

// Learnable utility structure. The first layer acts through the log/exp
// sandwich, so w1(i,j) is the exponent of feature i in hidden term j; w2(j,k)
// is the coefficient of term j in alternative k's utility and b2(0,k) the
// alternative-specific constant. The first layer has no bias: exp(b) would
// only rescale w2.
struct ModelParams {
    Matrix w1; // n x m (exponents)
    Matrix w2; // m x l (coefficients)
    Matrix b2; // 1 x l (constants)
    std::vector<std::string> feature_names; // n
    std::vector<std::string> alt_names;     // l
    std::vector<FeatureScale> normalization; // input scaling the model was trained with

    std::size_t num_features() const { return w1.rows(); }
    std::size_t num_nodes() const { return w1.cols(); }
    std::size_t num_alternatives() const { return w2.cols(); }

    void validate() const {
        if (w1.cols() != w2.rows())
            throw invalid_input_error("ModelParams: w1 cols != w2 rows");
        if (w2.cols() != b2.cols() || b2.rows() != 1)
            throw invalid_input_error("ModelParams: b2 shape does not match w2");
        if (feature_names.size() != w1.rows())
            throw invalid_input_error("ModelParams: feature name count != w1 rows");
        if (alt_names.size() != w2.cols())
            throw invalid_input_error("ModelParams: alternative name count != w2 cols");
        if (!normalization.empty() && normalization.size() != w1.rows())
            throw invalid_input_error("ModelParams: normalization record length != features");
        if (!w1.all_finite() || !w2.all_finite() || !b2.all_finite())
            throw invalid_input_error("ModelParams: non-finite parameter");
    }
};

// Uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] for every weight and bias, drawn
// in a fixed order (w1 row-major, w2 row-major, b2) so runs are reproducible.
inline ModelParams init_params(std::size_t n, std::size_t m, std::size_t l, Rng& rng,
                               std::vector<std::string> feature_names,
                               std::vector<std::string> alt_names) {
    ModelParams p;
    p.w1 = Matrix(n, m);
    p.w2 = Matrix(m, l);
    p.b2 = Matrix(1, l);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(n));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(m));
    for (double& w : p.w1.raw()) w = rng.uniform(-bound1, bound1);
    for (double& w : p.w2.raw()) w = rng.uniform(-bound2, bound2);
    for (double& w : p.b2.raw()) w = rng.uniform(-bound2, bound2);
    p.feature_names = std::move(feature_names);
    p.alt_names = std::move(alt_names);
    p.validate();
    return p;
}

// Intermediate values of one forward pass, kept for the backward pass.
struct ForwardTrace {
    Matrix x;    // B x n, inputs (all > 0)
    Matrix logx; // B x n
    Matrix z;    // B x m, hidden product terms (strictly positive)
    Matrix v;    // B x l, utilities
    Matrix p;    // B x l, row-wise softmax of v
};

// z = exp(log(x) * w1), V = z * w2 + b2, p = softmax(V) per row.
inline void forward_into(const ModelParams& params, const Matrix& x, ForwardTrace& t) {
    if (x.cols() != params.num_features())
        throw invalid_input_error("forward: x has " + std::to_string(x.cols()) +
                                  " features, model expects " +
                                  std::to_string(params.num_features()));
    t.x = x;
    if (!t.logx.same_shape(x)) t.logx = Matrix(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double v = x(i, j);
            if (!(v > 0.0))
                throw domain_error("forward: non-positive input in feature '" +
                                   params.feature_names[j] + "' (row " + std::to_string(i) +
                                   ", value " + std::to_string(v) + ")");
            t.logx(i, j) = std::log(v);
        }
    }
    matmul_into(t.logx, params.w1, t.z);
    for (double& a : t.z.raw()) a = std::exp(a);
    require_all_finite(t.z, "forward(z)");
    matmul_into(t.z, params.w2, t.v);
    for (std::size_t i = 0; i < t.v.rows(); ++i)
        for (std::size_t k = 0; k < t.v.cols(); ++k) t.v(i, k) += params.b2(0, k);
    require_all_finite(t.v, "forward(V)");
    stable_softmax_rows(t.v, t.p);
}

inline ForwardTrace forward(const ModelParams& params, const Matrix& x) {
    ForwardTrace t;
    forward_into(params, x, t);
    return t;
}

struct ParamGradients {
    Matrix w1; // n x m
    Matrix w2; // m x l
    Matrix b2; // 1 x l
};

// Scratch buffers for backward_params so the training loop does not allocate
// per batch.
struct BackwardScratch {
    Matrix dv; // B x l
    Matrix da; // B x m
};

// Gradients of the mean cross-entropy over the batch. labels are 0-based
// class indices here; the one-hot overload below matches the documented
// interface.
inline double backward_params_into(const ModelParams& params, const ForwardTrace& t,
                                   const std::vector<std::size_t>& labels, ParamGradients& g,
                                   BackwardScratch& s) {
    const std::size_t B = t.x.rows();
    const std::size_t l = params.num_alternatives();
    if (labels.size() != B)
        throw invalid_input_error("backward_params: label count != batch size");

    // dL/dV = (p - y) / B; loss is the batch mean cross-entropy
    if (s.dv.rows() != B || s.dv.cols() != l) s.dv = Matrix(B, l);
    double loss = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        if (labels[i] >= l)
            throw invalid_input_error("backward_params: label out of range");
        const double* pi = t.p.row(i);
        double* di = s.dv.row(i);
        for (std::size_t k = 0; k < l; ++k) di[k] = pi[k] / static_cast<double>(B);
        di[labels[i]] -= 1.0 / static_cast<double>(B);
        loss -= std::log(std::max(pi[labels[i]], kProbFloor));
    }
    loss /= static_cast<double>(B);

    // db2 = column sums of dL/dV
    if (g.b2.rows() != 1 || g.b2.cols() != l) g.b2 = Matrix(1, l);
    std::vector<double> cs = column_sums(s.dv);
    for (std::size_t k = 0; k < l; ++k) g.b2(0, k) = cs[k];

    // dW2 = z^T * dL/dV
    matmul_tn_into(t.z, s.dv, g.w2);

    // da = (dL/dV * w2^T) .* z, then dW1 = logx^T * da
    matmul_nt_into(s.dv, params.w2, s.da);
    for (std::size_t i = 0; i < s.da.size(); ++i) s.da.raw()[i] *= t.z.raw()[i];
    matmul_tn_into(t.logx, s.da, g.w1);
    return loss;
}

inline ParamGradients backward_params(const ModelParams& params, const ForwardTrace& t,
                                      const Matrix& y_onehot) {
    if (y_onehot.rows() != t.x.rows() || y_onehot.cols() != params.num_alternatives())
        throw invalid_input_error("backward_params: one-hot shape mismatch");
    std::vector<std::size_t> labels(y_onehot.rows());
    for (std::size_t i = 0; i < y_onehot.rows(); ++i)
        labels[i] = argmax_lowest(y_onehot.row(i), y_onehot.cols());
    ParamGradients g;
    BackwardScratch s;
    backward_params_into(params, t, labels, g, s);
    return g;
}

// Hidden terms z for a single input vector.
inline std::vector<double> hidden_terms(const ModelParams& params, const std::vector<double>& x) {
    const std::size_t n = params.num_features();
    const std::size_t m = params.num_nodes();
    if (x.size() != n) throw invalid_input_error("hidden_terms: x length != features");
    std::vector<double> logx(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0))
            throw domain_error("non-positive input in feature '" + params.feature_names[i] +
                               "'");
        logx[i] = std::log(x[i]);
    }
    std::vector<double> z(m);
    for (std::size_t j = 0; j < m; ++j) {
        double a = 0.0;
        for (std::size_t i = 0; i < n; ++i) a += logx[i] * params.w1(i, j);
        z[j] = std::exp(a);
        if (!std::isfinite(z[j])) throw numerical_error("hidden_terms: non-finite term");
    }
    return z;
}

inline std::vector<double> utilities(const ModelParams& params, const std::vector<double>& x) {
    std::vector<double> z = hidden_terms(params, x);
    std::vector<double> v(params.num_alternatives());
    for (std::size_t k = 0; k < v.size(); ++k) {
        double s = params.b2(0, k);
        for (std::size_t j = 0; j < z.size(); ++j) s += params.w2(j, k) * z[j];
        v[k] = s;
    }
    return v;
}

inline std::vector<double> choice_probabilities(const ModelParams& params,
                                                const std::vector<double>& x) {
    return stable_softmax(utilities(params, x));
}

// dV_k/dx_i = sum_j w2(j,k) * w1(i,j) * z_j / x_i
inline std::vector<double> grad_utility_wrt_input(const ModelParams& params,
                                                  const std::vector<double>& x,
                                                  std::size_t alt_index) {
    if (alt_index >= params.num_alternatives())
        throw invalid_input_error("grad_utility_wrt_input: alternative index out of range");
    std::vector<double> z = hidden_terms(params, x);
    std::vector<double> grad(params.num_features(), 0.0);
    for (std::size_t j = 0; j < z.size(); ++j) {
        const double wz = params.w2(j, alt_index) * z[j];
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad[i] += wz * params.w1(i, j) / x[i];
    }
    return grad;
}

// dL(y*, phi(x))/dx for a one-hot target alternative: chains (p - y*)
// through the utility gradients.
inline std::vector<double> grad_loss_wrt_input(const ModelParams& params,
                                               const std::vector<double>& x,
                                               std::size_t target_alt) {
    if (target_alt >= params.num_alternatives())
        throw invalid_input_error("grad_loss_wrt_input: alternative index out of range");
    std::vector<double> z = hidden_terms(params, x);
    std::vector<double> v(params.num_alternatives());
    for (std::size_t k = 0; k < v.size(); ++k) {
        double s = params.b2(0, k);
        for (std::size_t j = 0; j < z.size(); ++j) s += params.w2(j, k) * z[j];
        v[k] = s;
    }
    std::vector<double> dv = stable_softmax(v);
    dv[target_alt] -= 1.0;
    std::vector<double> grad(params.num_features(), 0.0);
    for (std::size_t j = 0; j < z.size(); ++j) {
        double c = 0.0;
        for (std::size_t k = 0; k < dv.size(); ++k) c += dv[k] * params.w2(j, k);
        const double cz = c * z[j];
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad[i] += cz * params.w1(i, j) / x[i];
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Checkpoint JSON
// ---------------------------------------------------------------------------

inline nlohmann::json checkpoint_to_json(const ModelParams& params) {
    params.validate();
    nlohmann::json j;
    j["n"] = params.num_features();
    j["m"] = params.num_nodes();
    j["l"] = params.num_alternatives();
    j["feature_names"] = params.feature_names;
    j["alt_names"] = params.alt_names;
    j["w1"] = params.w1.raw();
    j["w2"] = params.w2.raw();
    j["b2"] = params.b2.raw();
    if (params.normalization.empty()) {
        j["normalization"] = "none";
    } else {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& sc : params.normalization)
            arr.push_back({{"min", sc.min}, {"max", sc.max}, {"epsilon", sc.epsilon}});
        j["normalization"] = arr;
    }
    return j;
}

inline ModelParams checkpoint_from_json(const nlohmann::json& j) {
    for (const char* key : {"n", "m", "l", "feature_names", "alt_names", "w1", "w2", "b2",
                            "normalization"})
        if (!j.contains(key))
            throw parse_error(std::string("checkpoint: missing key '") + key + "'");
    const std::size_t n = j.at("n").get<std::size_t>();
    const std::size_t m = j.at("m").get<std::size_t>();
    const std::size_t l = j.at("l").get<std::size_t>();
    ModelParams p;
    p.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    p.alt_names = j.at("alt_names").get<std::vector<std::string>>();
    auto w1 = j.at("w1").get<std::vector<double>>();
    auto w2 = j.at("w2").get<std::vector<double>>();
    auto b2 = j.at("b2").get<std::vector<double>>();
    if (w1.size() != n * m) throw parse_error("checkpoint: w1 length != n*m");
    if (w2.size() != m * l) throw parse_error("checkpoint: w2 length != m*l");
    if (b2.size() != l) throw parse_error("checkpoint: b2 length != l");
    p.w1 = Matrix::from_rows(n, m, std::move(w1));
    p.w2 = Matrix::from_rows(m, l, std::move(w2));
    p.b2 = Matrix::from_rows(1, l, std::move(b2));
    const auto& norm = j.at("normalization");
    if (norm.is_array()) {
        for (const auto& e : norm)
            p.normalization.push_back({e.at("min").get<double>(), e.at("max").get<double>(),
                                       e.at("epsilon").get<double>()});
    } else if (!(norm.is_string() && norm.get<std::string>() == "none")) {
        throw parse_error("checkpoint: normalization must be an array or \"none\"");
    }
    p.validate();
    return p;
}

inline void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << checkpoint_to_json(params).dump(2) << '\n';
    if (!out) throw io_error("write failed for '" + path + "'");
}

inline ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("'" + path + "': " + e.what());
    }
    try {
        return checkpoint_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("'" + path + "': " + e.what());
    }
}

} // namespace diffdcm
