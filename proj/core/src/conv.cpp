#include "convbasis/conv.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "convbasis/attention.hpp"
#include "convbasis/error.hpp"
#include "convbasis/fft.hpp"

namespace convbasis {

namespace {

void require_nonempty(std::span<const double> x, const char *what) {
    if (x.empty())
        throw InvalidArgument(std::string(what) + ": empty vector");
}

void require_window(std::size_t m, std::size_t n) {
    if (m < 1 || m > n)
        throw InvalidArgument("window " + std::to_string(m) + " outside [1, " +
                              std::to_string(n) + "]");
}

} // namespace

ConvBasis::ConvBasis(std::size_t n, std::vector<SubConvTerm> terms)
    : n_(n), terms_(std::move(terms)) {
    if (n_ == 0)
        throw InvalidArgument("conv basis dimension must be positive");
    if (terms_.size() > n_)
        throw InvalidArgument("conv basis has more than n terms");
    for (std::size_t r = 0; r < terms_.size(); ++r) {
        const auto &t = terms_[r];
        if (t.b.size() != n_)
            throw InvalidArgument("conv basis term " + std::to_string(r) +
                                  " has length " + std::to_string(t.b.size()) +
                                  ", expected " + std::to_string(n_));
        require_window(t.m, n_);
        require_finite(t.b, "conv basis term");
        if (r > 0 && t.m >= terms_[r - 1].m)
            throw InvalidArgument("conv basis windows must be strictly decreasing");
    }
}

std::vector<std::size_t> ConvBasis::windows() const {
    std::vector<std::size_t> w;
    w.reserve(terms_.size());
    for (const auto &t : terms_)
        w.push_back(t.m);
    return w;
}

ConvBasis ConvBasis::truncated(std::size_t count) const {
    if (count > terms_.size())
        throw InvalidArgument("truncate: count exceeds basis size");
    return ConvBasis(n_, {terms_.begin(), terms_.begin() + static_cast<long>(count)});
}

Vector conv_matvec(std::span<const double> a, std::span<const double> x) {
    require_nonempty(a, "conv_matvec");
    require_same_length(a, x, "conv_matvec");
    return fft_linear_convolve(a, x, a.size());
}

Vector conv_matvec_naive(std::span<const double> a, std::span<const double> x) {
    require_nonempty(a, "conv_matvec_naive");
    require_same_length(a, x, "conv_matvec_naive");
    const std::size_t n = a.size();
    Vector y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j)
            s += a[i - j] * x[j];
        y[i] = s;
    }
    return y;
}

Vector subconv_matvec(const SubConvTerm &term, std::span<const double> x) {
    const std::size_t n = x.size();
    require_nonempty(x, "subconv_matvec");
    if (term.b.size() != n)
        throw InvalidArgument("subconv_matvec: basis vector length != |x|");
    require_window(term.m, n);
    const std::size_t m = term.m;
    Vector y(n, 0.0);
    auto tail = fft_linear_convolve(std::span(term.b).first(m), x.last(m), m);
    std::copy(tail.begin(), tail.end(), y.begin() + static_cast<long>(n - m));
    return y;
}

Vector subconv_transpose_matvec(const SubConvTerm &term, std::span<const double> x) {
    const std::size_t n = x.size();
    require_nonempty(x, "subconv_transpose_matvec");
    if (term.b.size() != n)
        throw InvalidArgument("subconv_transpose_matvec: basis vector length != |x|");
    require_window(term.m, n);
    const std::size_t m = term.m;
    // conv(c)^T = J conv(c) J for the reversal permutation J.
    Vector rev(x.rbegin(), x.rbegin() + static_cast<long>(m));
    auto tail = fft_linear_convolve(std::span(term.b).first(m), rev, m);
    Vector y(n, 0.0);
    for (std::size_t p = 0; p < m; ++p)
        y[n - 1 - p] = tail[p];
    return y;
}

Vector basis_matvec(const ConvBasis &h, std::span<const double> x) {
    if (x.size() != h.n())
        throw InvalidArgument("basis_matvec: dimension mismatch");
    Vector y(h.n(), 0.0);
    for (const auto &t : h.terms()) {
        const auto part = subconv_matvec(t, x);
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] += part[i];
    }
    return y;
}

Vector basis_transpose_matvec(const ConvBasis &h, std::span<const double> x) {
    if (x.size() != h.n())
        throw InvalidArgument("basis_transpose_matvec: dimension mismatch");
    Vector y(h.n(), 0.0);
    for (const auto &t : h.terms()) {
        const auto part = subconv_transpose_matvec(t, x);
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] += part[i];
    }
    return y;
}

Matrix basis_to_dense(const ConvBasis &h) {
    const std::size_t n = h.n();
    Matrix out(n, n);
    for (const auto &t : h.terms()) {
        const std::size_t off = n - t.m;
        for (std::size_t j = off; j < n; ++j)
            for (std::size_t i = j; i < n; ++i)
                out(i, j) += t.b[i - j];
    }
    return out;
}

double entry(const ConvBasis &h, std::size_t i, std::size_t j) {
    const std::size_t n = h.n();
    if (i >= n || j >= n)
        throw InvalidArgument("entry: index out of range");
    if (i < j)
        return 0.0;
    double s = 0.0;
    // Terms with m_l >= n - j cover column j; windows are decreasing.
    for (const auto &t : h.terms()) {
        if (t.m < n - j)
            break;
        s += t.b[i - j];
    }
    return s;
}

ConvBasis decompose_lower_triangular(const Matrix &h) {
    const std::size_t n = h.rows();
    if (h.cols() != n)
        throw InvalidArgument("decompose: matrix must be square");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (h(i, j) != 0.0)
                throw InvalidArgument("decompose: nonzero entry above the diagonal at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
    const double scale = linf_norm(h);
    if (scale == 0.0)
        throw InvalidArgument("decompose: zero matrix has no conv basis");
    const double tol = 1e-12 * std::max(1.0, scale);

    Matrix residual = h;
    std::vector<SubConvTerm> terms;
    for (std::size_t c = 0; c < n; ++c) {
        double col_max = 0.0;
        for (std::size_t i = c; i < n; ++i)
            col_max = std::max(col_max, std::abs(residual(i, c)));
        if (col_max <= tol)
            continue;
        SubConvTerm t{Vector(n, 0.0), n - c};
        for (std::size_t i = c; i < n; ++i)
            t.b[i - c] = residual(i, c);
        for (std::size_t j = c; j < n; ++j)
            for (std::size_t i = j; i < n; ++i)
                residual(i, j) -= t.b[i - j];
        terms.push_back(std::move(t));
    }
    return ConvBasis(n, std::move(terms));
}

std::vector<Vector> exp_transform(std::span<const Vector> b,
                                  std::span<const std::size_t> m) {
    if (b.size() != m.size())
        throw InvalidArgument("exp_transform: basis/window count mismatch");
    if (b.empty())
        return {};
    const std::size_t n = b[0].size();
    for (std::size_t r = 0; r < b.size(); ++r) {
        if (b[r].size() != n)
            throw InvalidArgument("exp_transform: basis vectors differ in length");
        require_window(m[r], n);
        if (r > 0 && m[r] >= m[r - 1])
            throw InvalidArgument("exp_transform: windows must be strictly decreasing");
    }
    std::vector<Vector> out(b.size(), Vector(n, 0.0));
    Vector prefix(n, 0.0);
    Vector prev_exp(n, 0.0);
    for (std::size_t r = 0; r < b.size(); ++r) {
        for (std::size_t p = 0; p < m[r]; ++p) {
            prefix[p] += b[r][p];
            if (prefix[p] > kExpScoreLimit)
                throw OverflowError("exp_transform: prefix sum " + std::to_string(prefix[p]) +
                                    " exceeds exp limit");
            const double e = std::exp(prefix[p]);
            out[r][p] = r == 0 ? e : e - prev_exp[p];
            prev_exp[p] = e;
        }
    }
    return out;
}

ConvBasis exp_transform(const ConvBasis &h) {
    std::vector<Vector> raw;
    raw.reserve(h.k());
    for (const auto &t : h.terms())
        raw.push_back(t.b);
    const auto windows = h.windows();
    auto transformed = exp_transform(raw, windows);
    std::vector<SubConvTerm> terms;
    terms.reserve(h.k());
    for (std::size_t r = 0; r < h.k(); ++r)
        terms.push_back({std::move(transformed[r]), windows[r]});
    return ConvBasis(h.n(), std::move(terms));
}

Vector toeplitz_matvec(std::span<const double> a, std::span<const double> x) {
    require_nonempty(x, "toeplitz_matvec");
    const std::size_t n = x.size();
    if (a.size() != 2 * n - 1)
        throw InvalidArgument("toeplitz_matvec: expected " + std::to_string(2 * n - 1) +
                              " coefficients, got " + std::to_string(a.size()));
    // Circulant embedding: first column holds a_0..a_{n-1} then a_{-(n-1)}..a_{-1}.
    const std::size_t len = next_power_of_two(2 * n);
    ComplexVector c(len), z(len);
    for (std::size_t p = 0; p < n; ++p)
        c[p] = a[n - 1 + p];
    for (std::size_t p = 1; p < n; ++p)
        c[len - p] = a[n - 1 - p];
    std::copy(x.begin(), x.end(), z.begin());
    fft_inplace(c, false);
    fft_inplace(z, false);
    for (std::size_t i = 0; i < len; ++i)
        c[i] *= z[i];
    fft_inplace(c, true);
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = c[i].real();
    return y;
}

Vector circulant_matvec(std::span<const double> a, std::span<const double> x) {
    require_nonempty(a, "circulant_matvec");
    require_same_length(a, x, "circulant_matvec");
    const std::size_t n = a.size();
    const auto full = fft_linear_convolve(a, x, 2 * n - 1);
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = full[i] + (i + n < full.size() ? full[i + n] : 0.0);
    return y;
}

} // namespace convbasis
