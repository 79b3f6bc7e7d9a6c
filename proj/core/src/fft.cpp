#include "convbasis/fft.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <numbers>
#include <string>

#include "convbasis/error.hpp"

namespace convbasis {

bool is_power_of_two(std::size_t n) noexcept { return std::has_single_bit(n); }

std::size_t next_power_of_two(std::size_t n) noexcept {
    return n <= 1 ? 1 : std::bit_ceil(n);
}

void fft_inplace(std::span<std::complex<double>> x, bool inverse) {
    const std::size_t n = x.size();
    if (!is_power_of_two(n))
        throw InvalidArgument("fft: length " + std::to_string(n) +
                              " is not a power of two");
    if (n == 1)
        return;

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(x[i], x[j]);
    }

    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        // Twiddles are evaluated directly rather than by repeated
        // multiplication so the error stays O(eps log n).
        std::vector<std::complex<double>> w(half);
        for (std::size_t k = 0; k < half; ++k) {
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                               static_cast<double>(len);
            w[k] = {std::cos(ang), std::sin(ang)};
        }
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const auto u = x[start + k];
                const auto v = x[start + k + half] * w[k];
                x[start + k] = u + v;
                x[start + k + half] = u - v;
            }
        }
    }

    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto &z : x)
            z *= inv;
    }
}

ComplexVector fft(ComplexVector x, bool inverse) {
    fft_inplace(x, inverse);
    return x;
}

std::vector<double> fft_linear_convolve(std::span<const double> a,
                                        std::span<const double> x,
                                        std::size_t out_len) {
    if (a.empty() || x.empty())
        throw InvalidArgument("fft_linear_convolve: empty input");
    const std::size_t len =
        next_power_of_two(std::max(2 * std::max(a.size(), x.size()), out_len));
    ComplexVector fa(len), fx(len);
    std::copy(a.begin(), a.end(), fa.begin());
    std::copy(x.begin(), x.end(), fx.begin());
    fft_inplace(fa, false);
    fft_inplace(fx, false);
    for (std::size_t i = 0; i < len; ++i)
        fa[i] *= fx[i];
    fft_inplace(fa, true);

#ifndef NDEBUG
    // Bound on any output magnitude; the residue is relative to it.
    double scale = 0.0;
    for (double v : a)
        scale += std::abs(v);
    double xmax = 0.0;
    for (double v : x)
        xmax = std::max(xmax, std::abs(v));
    scale *= xmax;
#endif
    std::vector<double> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        assert(std::abs(fa[i].imag()) < 1e-9 * (1.0 + std::abs(fa[i].real()) + scale));
        out[i] = fa[i].real();
    }
    return out;
}

double fft_flops(std::size_t length) noexcept {
    if (length <= 1)
        return 0.0;
    return 5.0 * static_cast<double>(length) * std::log2(static_cast<double>(length));
}

} // namespace convbasis
