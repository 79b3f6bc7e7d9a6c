#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace convbasis {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles. Entries must be finite.
class Matrix {
  public:
    Matrix() = default;
    /// Zero-filled rows x cols matrix. Both dimensions must be >= 1.
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix constant(std::size_t rows, std::size_t cols, double value);
    static Matrix from_columns(std::span<const Vector> columns);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double operator()(std::size_t i, std::size_t j) const noexcept {
        return data_[i * cols_ + j];
    }
    double &operator()(std::size_t i, std::size_t j) noexcept {
        return data_[i * cols_ + j];
    }

    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    Vector column(std::size_t j) const;
    void set_column(std::size_t j, std::span<const double> values);

    std::span<const double> data() const noexcept { return data_; }

    Matrix transposed() const;

    /// Throws InvalidArgument if any entry is NaN or infinite.
    void require_finite(const char *what) const;

    bool operator==(const Matrix &) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix &a, const Matrix &b);
Vector matvec(const Matrix &a, std::span<const double> x);
Matrix hadamard(const Matrix &a, const Matrix &b);
Matrix operator+(const Matrix &a, const Matrix &b);
Matrix operator-(const Matrix &a, const Matrix &b);
Matrix operator*(double s, const Matrix &a);

/// max_{i,j} |A_ij|
double linf_norm(const Matrix &a);
/// sum_{i,j} |A_ij|
double l1_norm(const Matrix &a);
double frobenius_norm(const Matrix &a);
double l1_vec(std::span<const double> v);
double linf_vec(std::span<const double> v);
double max_abs_diff(const Matrix &a, const Matrix &b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
/// max|a - b| / max(max|b|, tiny); 0 when both are identically zero.
double relative_linf_diff(const Matrix &a, const Matrix &reference);
double relative_linf_diff(std::span<const double> a,
                          std::span<const double> reference);

/// ||Y - Yt||_F^2 / ||Y||_F^2, the error metric reported by the sweeps.
double relative_frobenius_diff(const Matrix &y, const Matrix &yt);

void require_finite(std::span<const double> v, const char *what);
void require_same_length(std::span<const double> a, std::span<const double> b,
                         const char *what);

} // namespace convbasis
