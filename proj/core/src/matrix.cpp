#include "convbasis/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "convbasis/error.hpp"

namespace convbasis {

namespace {

void require_positive_dims(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0)
        throw InvalidArgument("matrix dimensions must be positive, got " +
                              std::to_string(rows) + "x" + std::to_string(cols));
}

void require_same_shape(const Matrix &a, const Matrix &b, const char *what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidArgument(std::string(what) + ": shape mismatch " +
                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                              " vs " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()));
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    require_positive_dims(rows, cols);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    require_positive_dims(rows, cols);
    if (data_.size() != rows * cols)
        throw InvalidArgument("matrix data length " + std::to_string(data_.size()) +
                              " != rows*cols " + std::to_string(rows * cols));
    require_finite("matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows.size() ? rows.begin()->size() : 0;
    require_positive_dims(rows_, cols_);
    data_.reserve(rows_ * cols_);
    for (const auto &r : rows) {
        if (r.size() != cols_)
            throw InvalidArgument("ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
    require_finite("matrix");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

Matrix Matrix::constant(std::size_t rows, std::size_t cols, double value) {
    return Matrix(rows, cols, std::vector<double>(rows * cols, value));
}

Matrix Matrix::from_columns(std::span<const Vector> columns) {
    if (columns.empty())
        throw InvalidArgument("from_columns: no columns");
    Matrix m(columns[0].size(), columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j)
        m.set_column(j, columns[j]);
    return m;
}

Vector Matrix::column(std::size_t j) const {
    if (j >= cols_)
        throw InvalidArgument("column index out of range");
    Vector out(rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        out[i] = (*this)(i, j);
    return out;
}

void Matrix::set_column(std::size_t j, std::span<const double> values) {
    if (j >= cols_ || values.size() != rows_)
        throw InvalidArgument("set_column: index or length mismatch");
    for (std::size_t i = 0; i < rows_; ++i)
        (*this)(i, j) = values[i];
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            t(j, i) = (*this)(i, j);
    return t;
}

void Matrix::require_finite(const char *what) const {
    convbasis::require_finite(data_, what);
}

Matrix matmul(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.rows())
        throw InvalidArgument("matmul: inner dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto crow = c.row(i);
        for (std::size_t l = 0; l < a.cols(); ++l) {
            const double ail = a(i, l);
            if (ail == 0.0)
                continue;
            auto brow = b.row(l);
            for (std::size_t j = 0; j < b.cols(); ++j)
                crow[j] += ail * brow[j];
        }
    }
    return c;
}

Vector matvec(const Matrix &a, std::span<const double> x) {
    if (a.cols() != x.size())
        throw InvalidArgument("matvec: dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j)
            s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

Matrix hadamard(const Matrix &a, const Matrix &b) {
    require_same_shape(a, b, "hadamard");
    Matrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            c(i, j) = a(i, j) * b(i, j);
    return c;
}

Matrix operator+(const Matrix &a, const Matrix &b) {
    require_same_shape(a, b, "operator+");
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            c(i, j) += b(i, j);
    return c;
}

Matrix operator-(const Matrix &a, const Matrix &b) {
    require_same_shape(a, b, "operator-");
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            c(i, j) -= b(i, j);
    return c;
}

Matrix operator*(double s, const Matrix &a) {
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            c(i, j) *= s;
    return c;
}

double linf_norm(const Matrix &a) {
    if (a.empty())
        throw InvalidArgument("linf_norm: empty matrix");
    return linf_vec(a.data());
}

double l1_norm(const Matrix &a) {
    if (a.empty())
        throw InvalidArgument("l1_norm: empty matrix");
    return l1_vec(a.data());
}

double frobenius_norm(const Matrix &a) {
    double s = 0.0;
    for (double x : a.data())
        s += x * x;
    return std::sqrt(s);
}

double l1_vec(std::span<const double> v) {
    if (v.empty())
        throw InvalidArgument("l1_vec: empty vector");
    double s = 0.0;
    for (double x : v)
        s += std::abs(x);
    return s;
}

double linf_vec(std::span<const double> v) {
    if (v.empty())
        throw InvalidArgument("linf_vec: empty vector");
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

double max_abs_diff(const Matrix &a, const Matrix &b) {
    require_same_shape(a, b, "max_abs_diff");
    return max_abs_diff(a.data(), b.data());
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double relative_linf_diff(const Matrix &a, const Matrix &reference) {
    require_same_shape(a, reference, "relative_linf_diff");
    return relative_linf_diff(a.data(), reference.data());
}

double relative_linf_diff(std::span<const double> a,
                          std::span<const double> reference) {
    const double diff = max_abs_diff(a, reference);
    const double scale = reference.empty() ? 0.0 : linf_vec(reference);
    if (scale == 0.0)
        return diff;
    return diff / scale;
}

double relative_frobenius_diff(const Matrix &y, const Matrix &yt) {
    require_same_shape(y, yt, "relative_frobenius_diff");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y.data().size(); ++i) {
        const double d = y.data()[i] - yt.data()[i];
        num += d * d;
        den += y.data()[i] * y.data()[i];
    }
    if (den == 0.0)
        throw InvalidArgument("relative_frobenius_diff: reference has zero norm");
    return num / den;
}

void require_finite(std::span<const double> v, const char *what) {
    for (double x : v)
        if (!std::isfinite(x))
            throw InvalidArgument(std::string(what) + ": non-finite entry");
}

void require_same_length(std::span<const double> a, std::span<const double> b,
                         const char *what) {
    if (a.size() != b.size())
        throw InvalidArgument(std::string(what) + ": length mismatch " +
                              std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
}

} // namespace convbasis
