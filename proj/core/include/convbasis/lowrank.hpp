#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "convbasis/mask.hpp"
#include "convbasis/matrix.hpp"

namespace convbasis {

/// U1, U2 are n x k; the represented score matrix is U1 U2^T.
struct LowRankFactors {
    Matrix U1, U2;

    std::size_t n() const noexcept { return U1.rows(); }
    std::size_t k() const noexcept { return U1.cols(); }
    void validate() const;
};

/// (M o U1 U2^T) v for the causal mask by a running prefix sum, O(nk).
Vector causal_matvec(const LowRankFactors &f, std::span<const double> v);
/// Row-change mask: the running sum is patched by each row's deltas.
Vector rowchange_matvec(const LowRankFactors &f, const MaskSpec &mask,
                        std::span<const double> v);
/// Continuous-row mask: per-row range sums from a segment tree, O(nk log n).
Vector continuous_matvec(const LowRankFactors &f, const MaskSpec &mask,
                         std::span<const double> v);
/// sum_g diag(W_{*,g}) U1 (U2^T)_{*,S_g} v_{S_g}, O(nkr).
Vector distinct_columns_matvec(const LowRankFactors &f, const MaskSpec &mask,
                               std::span<const double> v);
/// sum_g diag(e_{S_g}) U1 U2^T diag(W_{g,*}) v, O(nkr).
Vector distinct_rows_matvec(const LowRankFactors &f, const MaskSpec &mask,
                            std::span<const double> v);

/// Dispatches on the mask encoding. Dense masks go through their row-change
/// delta encoding.
Vector masked_lowrank_matvec(const LowRankFactors &f, const MaskSpec &mask,
                             std::span<const double> v);

/// D~^{-1} A~ V with A~ = W o U1 U2^T and D~ = diag(A~ 1).
Matrix masked_lowrank_attention(const LowRankFactors &f, const MaskSpec &mask,
                                const Matrix &V);

/// Sums of k-vectors over closed index ranges. Leaves are padded to a power
/// of two; node i has children 2i and 2i+1.
class SegmentTree {
  public:
    /// Leaf i holds values.row(i).
    explicit SegmentTree(const Matrix &values);

    std::size_t size() const noexcept { return n_; }
    /// Nodes whose disjoint union is [lo, hi]; at most 2 ceil(log2 n).
    std::vector<std::size_t> cover(std::size_t lo, std::size_t hi) const;
    Vector range_sum(std::size_t lo, std::size_t hi) const;
    std::span<const double> node(std::size_t i) const;

  private:
    std::size_t n_ = 0;
    std::size_t leaves_ = 0;
    std::size_t k_ = 0;
    std::vector<double> nodes_;
};

struct RankKFit {
    LowRankFactors factors;
    /// max_ij |H~_ij - H_ij| / H_ij
    double achieved = 0.0;
};

/// Truncated SVD of a strictly positive H: U1 = U_k S_k, U2 = V_k.
RankKFit best_rank_k_factors(const Matrix &h, std::size_t k);

/// best_rank_k_factors, throwing FixtureError with the achieved relative
/// error when it exceeds epsilon.
LowRankFactors epsk_fixture_factors(const Matrix &h, std::size_t k, double epsilon);

} // namespace convbasis
