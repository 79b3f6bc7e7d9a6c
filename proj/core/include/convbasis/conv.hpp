#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "convbasis/matrix.hpp"

namespace convbasis {

/// conv(b, m): the n x n matrix whose trailing m x m block is the lower
/// triangular convolution matrix of b[0..m) and which is zero elsewhere.
/// Entries of b at positions >= m do not contribute.
struct SubConvTerm {
    Vector b;
    std::size_t m;
};

/// H = sum_r conv(b_r, m_r) with n >= m_1 > m_2 > ... > m_k >= 1.
class ConvBasis {
  public:
    ConvBasis() = default;
    /// Validates term lengths, window range and strict window ordering.
    ConvBasis(std::size_t n, std::vector<SubConvTerm> terms);

    std::size_t n() const noexcept { return n_; }
    std::size_t k() const noexcept { return terms_.size(); }
    const std::vector<SubConvTerm> &terms() const noexcept { return terms_; }
    std::vector<std::size_t> windows() const;

    /// The first `count` terms (largest windows).
    ConvBasis truncated(std::size_t count) const;

  private:
    std::size_t n_ = 0;
    std::vector<SubConvTerm> terms_;
};

/// conv(a) x via zero padding to a power of two >= 2n and one spectral product.
Vector conv_matvec(std::span<const double> a, std::span<const double> x);
/// conv(a) x by the O(n^2) triangular loop; the baseline the benchmarks time.
Vector conv_matvec_naive(std::span<const double> a, std::span<const double> x);

/// conv(b, m) x, transforming only the trailing m-slice.
Vector subconv_matvec(const SubConvTerm &term, std::span<const double> x);
/// conv(b, m)^T x.
Vector subconv_transpose_matvec(const SubConvTerm &term, std::span<const double> x);

/// H x for H given by its basis; k FFT matvecs.
Vector basis_matvec(const ConvBasis &h, std::span<const double> x);
/// H^T x.
Vector basis_transpose_matvec(const ConvBasis &h, std::span<const double> x);

Matrix basis_to_dense(const ConvBasis &h);

/// H_ij in O(k) without materializing H (0-based indices).
double entry(const ConvBasis &h, std::size_t i, std::size_t j);

/// Column-peeling decomposition of a lower triangular H != 0. Scans columns
/// left to right and emits conv(residual column, n - c) whenever the residual
/// column c is nonzero beyond 1e-12 * max(1, ||H||_inf).
ConvBasis decompose_lower_triangular(const Matrix &h);

/// Rewrites a raw basis b (windows m) into b~ such that
/// M o exp(sum conv(b_r, m_r)) = sum conv(b~_r, m_r) when m_1 = n:
/// b~_1 = exp(b_1), b~_r = exp(sum_{l<=r} b_l) - exp(sum_{l<r} b_l).
/// Positions at or beyond each window are set to zero. Throws OverflowError
/// if any in-window prefix sum exceeds kExpScoreLimit.
std::vector<Vector> exp_transform(std::span<const Vector> b,
                                  std::span<const std::size_t> m);
ConvBasis exp_transform(const ConvBasis &h);

/// Toep(a) x where a has length 2n-1 and Toep(a)_ij = a[i - j + n - 1].
Vector toeplitz_matvec(std::span<const double> a, std::span<const double> x);
/// Circ(a) x where Circ(a)_ij = a[(i - j) mod n].
Vector circulant_matvec(std::span<const double> a, std::span<const double> x);

} // namespace convbasis
