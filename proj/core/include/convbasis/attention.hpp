#pragma once

#include "convbasis/mask.hpp"
#include "convbasis/matrix.hpp"

namespace convbasis {

/// Largest scaled score accepted before exp(); double overflows near 709.78.
inline constexpr double kExpScoreLimit = 700.0;

/// Single-head attention operands. Q, K and V are all n x d.
struct AttentionInput {
    Matrix Q;
    Matrix K;
    Matrix V;

    std::size_t n() const noexcept { return Q.rows(); }
    std::size_t d() const noexcept { return Q.cols(); }
    /// Throws InvalidArgument unless Q, K, V share n and d.
    void validate() const;
};

/// Brute-force reference: Y = D^{-1} A V with A = W o exp(scale * Q K^T)
/// and D = diag(A 1). Scores are exponentiated as-is (no max subtraction) so
/// results are comparable entry-for-entry with the structured paths.
Matrix naive_masked_attention(const AttentionInput &input, const MaskSpec &mask,
                              double scale = 1.0);

/// Same as naive_masked_attention but from an explicit score matrix S
/// (n x n): Y = D^{-1} (W o exp(S)) V.
Matrix softmax_attention_from_scores(const Matrix &scores, const MaskSpec &mask,
                                     const Matrix &V);

/// Y = D^{-1} A V for an explicit nonnegative weight matrix A.
Matrix normalized_apply(const Matrix &weights, const Matrix &V);

/// Column j of W o (Q K^T) without forming the n x n product.
Vector masked_score_column(const Matrix &Q, const Matrix &K, const MaskSpec &mask,
                           std::size_t j);

} // namespace convbasis
