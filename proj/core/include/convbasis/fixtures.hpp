#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "convbasis/conv.hpp"
#include "convbasis/gradient.hpp"
#include "convbasis/recovery.hpp"
#include "convbasis/matrix.hpp"

namespace convbasis {

/// Parameters of the unit-vector construction for dimension d with
/// l = floor((d + 1) / 2) amplitudes. For odd d, amplitude[l-1] is the
/// constant coordinate and theta has l - 1 entries; otherwise l entries.
struct UnitConstructionParams {
    std::vector<double> theta;
    std::vector<double> amplitude;
    /// permutation[c] is the coordinate slot of construction coordinate c.
    std::vector<std::size_t> permutation;
    /// d x d orthonormal matrix applied to each row.
    Matrix rotation;
};

/// Rows z_i (i = 0..n-1) with ||z_i|| = 1 and <z_i, z_j> depending only on
/// i - j. Validates sum a^2 = 1, the permutation and orthonormality.
Matrix general_unit_construction(std::size_t n, std::size_t d,
                                 const UnitConstructionParams &params);

/// Seeded random angles, amplitudes, permutation and rotation.
UnitConstructionParams random_unit_params(std::size_t d, std::uint64_t seed);

struct QKPair {
    Matrix Q, K;
};

/// Q = K = Z, so Q K^T is symmetric Toeplitz.
QKPair toeplitz_qk(std::size_t n, std::size_t d, const UnitConstructionParams &params);

/// theta = 2 pi / n in the planar construction, so Q K^T is circulant.
QKPair circulant_qk(std::size_t n, std::size_t d);

/// min over j <= i of || sum_{l=j..i} (b_l)[0, T) ||_1; +inf for an empty basis.
double nondegeneracy_margin(const ConvBasis &h, std::size_t T);

struct SeparatedInstance {
    ConvBasis basis;
    /// Q = dense(basis), K = I, so Q K^T = dense(basis).
    Matrix Q, K;
};

struct SeparatedOptions {
    /// Magnitude of basis entries beyond the T-prefix.
    double tail_scale = 1.0;
    /// Draw tail entries from [0, tail_scale] instead of [-tail_scale, tail_scale].
    bool nonnegative_tail = false;
    std::size_t max_attempts = 1000;
};

/// Random k-conv basis with m_1 = n, windows >= T and nondegeneracy margin
/// >= 1.01 delta, realized at full rank.
SeparatedInstance separated_conv_instance(std::size_t n, std::size_t k, std::size_t T,
                                          double delta, std::uint64_t seed,
                                          const SeparatedOptions &options = {});

/// n x n matrix with entries uniform in [-epsilon, epsilon] and one entry at
/// exactly +-epsilon, so ||R||_inf = epsilon.
Matrix noise_matrix(std::size_t n, double epsilon, std::uint64_t seed);

/// A with A A^T = Wq Wk^T for a symmetric positive semidefinite product.
Matrix psd_weight_factor(const Matrix &Wq, const Matrix &Wk);

struct ConvTrainingFixture {
    TrainingInstance instance;
    /// Raw basis of M o (A1 X A2^T).
    ConvBasis scores;
    /// Basis of u = M o exp(A1 X A2^T).
    ConvBasis u;
    /// Recovery parameters for u (T = 1, epsilon = 0).
    NonDegenSpec params;
};

/// Training instance with d = k + 1 whose masked scores form a k-conv basis:
/// a planar rotation term of window n plus k - 1 constant terms switched on
/// by indicator columns of A2. X is a random rotation with A1 X fixed.
ConvTrainingFixture conv_training_instance(std::size_t n, std::size_t k,
                                           std::uint64_t seed);

/// Seeded matrix with entries uniform in [lo, hi].
Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                     double lo = -1.0, double hi = 1.0);
Vector random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

} // namespace convbasis
