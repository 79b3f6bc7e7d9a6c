#pragma once

// Brute-force references used by the tests. Nothing here calls the library's
// fast paths; only the Matrix container is shared.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "convbasis/matrix.hpp"

namespace oracle {

using convbasis::Matrix;
using convbasis::Vector;

inline std::vector<std::complex<double>> dft(const std::vector<std::complex<double>> &x,
                                             bool inverse = false) {
    const std::size_t n = x.size();
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<std::complex<double>> y(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k * j % n) /
                               static_cast<double>(n);
            s += x[j] * std::polar(1.0, ang);
        }
        y[k] = inverse ? s / static_cast<double>(n) : s;
    }
    return y;
}

/// conv(b, m) materialized entry by entry.
inline Matrix subconv_dense(const Vector &b, std::size_t m) {
    const std::size_t n = b.size();
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i >= j && j >= n - m)
                out(i, j) = b[i - j];
    return out;
}

inline Vector dense_matvec(const Matrix &a, const Vector &x) {
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            y[i] += a(i, j) * x[j];
    return y;
}

inline Matrix dense_product(const Matrix &a, const Matrix &b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < a.cols(); ++l)
                s += a(i, l) * b(l, j);
            c(i, j) = s;
        }
    return c;
}

inline Matrix transpose(const Matrix &a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            t(j, i) = a(i, j);
    return t;
}

/// Softmax attention computed one output entry at a time from the 0/1 mask W
/// and score matrix S, with no shared normalization pass.
inline Matrix per_entry_softmax(const Matrix &S, const Matrix &W, const Matrix &V) {
    const std::size_t n = S.rows();
    Matrix Y(n, V.cols());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < V.cols(); ++c) {
            double num = 0.0, den = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (W(i, j) != 0.0) {
                    num += std::exp(S(i, j)) * V(j, c);
                    den += std::exp(S(i, j));
                }
            Y(i, c) = num / den;
        }
    return Y;
}

inline Matrix causal_bits(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            m(i, j) = 1.0;
    return m;
}

inline Matrix scores(const Matrix &Q, const Matrix &K, double scale = 1.0) {
    Matrix S = dense_product(Q, transpose(K));
    for (std::size_t i = 0; i < S.rows(); ++i)
        for (std::size_t j = 0; j < S.cols(); ++j)
            S(i, j) *= scale;
    return S;
}

inline double max_abs(const Matrix &a, const Matrix &b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

inline double max_abs(const Vector &a, const Vector &b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double rel_linf(const Vector &a, const Vector &ref) {
    double r = 0.0;
    for (double x : ref)
        r = std::max(r, std::abs(x));
    return max_abs(a, ref) / std::max(r, 1e-300);
}

inline double rel_linf(const Matrix &a, const Matrix &ref) {
    double r = 0.0;
    for (double x : ref.data())
        r = std::max(r, std::abs(x));
    return max_abs(a, ref) / std::max(r, 1e-300);
}

/// Central differences of f at x with step 1e-5 * max(1, |x_i|).
inline Matrix finite_difference(const std::function<double(const Matrix &)> &f,
                                const Matrix &x) {
    Matrix g(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(x(i, j)));
            Matrix p = x, m = x;
            p(i, j) += h;
            m(i, j) -= h;
            g(i, j) = (f(p) - f(m)) / (2.0 * h);
        }
    return g;
}

/// Attention loss 0.5 || softmax_causal(A1 X A2^T) A3 Y - E ||_F^2 evaluated
/// from scratch.
inline double attention_loss(const Matrix &A1, const Matrix &X, const Matrix &A2,
                             const Matrix &A3, const Matrix &Y, const Matrix &E) {
    const Matrix S = dense_product(dense_product(A1, X), transpose(A2));
    const Matrix Z = per_entry_softmax(S, causal_bits(A1.rows()), A3);
    const Matrix R = dense_product(Z, Y);
    double s = 0.0;
    for (std::size_t i = 0; i < R.rows(); ++i)
        for (std::size_t j = 0; j < R.cols(); ++j) {
            const double c = R(i, j) - E(i, j);
            s += c * c;
        }
    return 0.5 * s;
}

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform(double lo = -1.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(gen);
    }
    std::size_t index(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
    }
    Vector vec(std::size_t n, double lo = -1.0, double hi = 1.0) {
        Vector v(n);
        for (double &x : v)
            x = uniform(lo, hi);
        return v;
    }
    Matrix mat(std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
        Matrix m(r, c);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                m(i, j) = uniform(lo, hi);
        return m;
    }
};

} // namespace oracle
