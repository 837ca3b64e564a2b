#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "diffdcm/error.hpp"

namespace diffdcm {

// Dense row-major matrix of doubles. Everything in this project is at most a
// few hundred entries per parameter block, so there are no sparse or blocked
// paths.
class Matrix {
  public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix row_vector(std::vector<double> v) {
        Matrix m;
        m.rows_ = 1;
        m.cols_ = v.size();
        m.data_ = std::move(v);
        return m;
    }

    static Matrix from_rows(std::size_t rows, std::size_t cols, std::vector<double> data) {
        if (data.size() != rows * cols)
            throw invalid_input_error("Matrix::from_rows: data length " +
                                      std::to_string(data.size()) + " != " +
                                      std::to_string(rows) + "x" + std::to_string(cols));
        Matrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.data_ = std::move(data);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    void fill(double v) { data_.assign(data_.size(), v); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

  private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
    if (!a.same_shape(b))
        throw invalid_input_error(std::string(where) + ": shape mismatch " +
                                  std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                  " vs " + std::to_string(b.rows()) + "x" +
                                  std::to_string(b.cols()));
}

// c = a * b
inline void matmul_into(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.rows())
        throw invalid_input_error("matmul: inner dimensions disagree");
    if (c.rows() != a.rows() || c.cols() != b.cols()) c = Matrix(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row(i);
        for (std::size_t j = 0; j < b.cols(); ++j) ci[j] = 0.0;
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c;
    matmul_into(a, b, c);
    return c;
}

// c = a^T * b
inline void matmul_tn_into(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows() != b.rows())
        throw invalid_input_error("matmul_tn: inner dimensions disagree");
    if (c.rows() != a.cols() || c.cols() != b.cols()) c = Matrix(a.cols(), b.cols());
    c.fill(0.0);
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* ak = a.row(k);
        const double* bk = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            double* ci = c.row(i);
            const double aki = ak[i];
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
}

// c = a * b^T
inline void matmul_nt_into(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.cols())
        throw invalid_input_error("matmul_nt: inner dimensions disagree");
    if (c.rows() != a.rows() || c.cols() != b.rows()) c = Matrix(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
            ci[j] = s;
        }
    }
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline std::vector<double> column_sums(const Matrix& a) {
    std::vector<double> s(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) s[j] += ai[j];
    }
    return s;
}

inline void require_all_finite(const Matrix& m, const char* where) {
    if (!m.all_finite())
        throw numerical_error(std::string(where) + ": non-finite entries");
}

} // namespace diffdcm
