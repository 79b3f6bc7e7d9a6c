#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace convbasis {

using ComplexVector = std::vector<std::complex<double>>;

/// Radix-2 DFT. The inverse transform includes the 1/n factor, so
/// fft(fft(x), true) == x up to rounding. Length must be a power of two.
ComplexVector fft(ComplexVector x, bool inverse = false);

/// In-place variant of fft().
void fft_inplace(std::span<std::complex<double>> x, bool inverse);

bool is_power_of_two(std::size_t n) noexcept;
/// Smallest power of two >= n (n >= 1).
std::size_t next_power_of_two(std::size_t n) noexcept;

/// Real linear convolution restricted to the first out_len outputs,
/// out_p = sum_{i+j=p} a_i x_j, computed on a power-of-two grid of at least
/// max(2*max(|a|,|x|), out_len) points.
std::vector<double> fft_linear_convolve(std::span<const double> a,
                                        std::span<const double> x,
                                        std::size_t out_len);

/// Analytic flop count used by the benchmark records: 5 L log2 L per
/// transform of length L.
double fft_flops(std::size_t length) noexcept;

} // namespace convbasis
