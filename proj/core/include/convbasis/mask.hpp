#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "convbasis/matrix.hpp"

namespace convbasis {

/// M_ij = 1 iff i >= j.
struct CausalMask {
    std::size_t n;
};

/// Row supports given as deltas against the previous row (row -1 is empty):
/// added[j] = S_j \ S_{j-1}, removed[j] = S_{j-1} \ S_j.
struct RowChangeMask {
    std::size_t n;
    std::vector<std::vector<std::size_t>> added;
    std::vector<std::vector<std::size_t>> removed;
};

/// Row i is supported on the closed column range [start[i], end[i]].
struct ContinuousRowMask {
    std::vector<std::size_t> start;
    std::vector<std::size_t> end;
};

/// Columns in the same group are identical; prototype[g] is that column.
struct DistinctColumnsMask {
    std::vector<std::size_t> group;
    std::vector<std::vector<std::uint8_t>> prototype;
};

/// Rows in the same group are identical; prototype[g] is that row.
struct DistinctRowsMask {
    std::vector<std::size_t> group;
    std::vector<std::vector<std::uint8_t>> prototype;
};

/// Explicit n x n bit matrix, row-major.
struct DenseMask {
    std::size_t n;
    std::vector<std::uint8_t> bits;
};

/// A 0/1 attention mask in one of the structured encodings. Instances are
/// only created through the validating factories below.
class MaskSpec {
  public:
    using Variant = std::variant<CausalMask, RowChangeMask, ContinuousRowMask,
                                 DistinctColumnsMask, DistinctRowsMask, DenseMask>;

    static MaskSpec causal(std::size_t n);
    static MaskSpec row_change(std::size_t n,
                               std::vector<std::vector<std::size_t>> added,
                               std::vector<std::vector<std::size_t>> removed);
    /// Delta encoding of an arbitrary 0/1 matrix.
    static MaskSpec row_change_from_dense(const Matrix &bits);
    static MaskSpec continuous_row(std::vector<std::size_t> start,
                                   std::vector<std::size_t> end);
    static MaskSpec distinct_columns(std::vector<std::size_t> group,
                                     std::vector<std::vector<std::uint8_t>> prototype);
    static MaskSpec distinct_rows(std::vector<std::size_t> group,
                                  std::vector<std::vector<std::uint8_t>> prototype);
    /// Groups identical columns of a 0/1 matrix (first-occurrence order).
    static MaskSpec distinct_columns_from_dense(const Matrix &bits);
    static MaskSpec distinct_rows_from_dense(const Matrix &bits);
    static MaskSpec dense(const Matrix &bits);

    std::size_t n() const noexcept;
    const Variant &variant() const noexcept { return v_; }
    std::string kind() const;

    bool at(std::size_t i, std::size_t j) const;
    /// Column j as a 0/1 vector.
    Vector column(std::size_t j) const;
    /// Sorted support of row i.
    std::vector<std::size_t> row_support(std::size_t i) const;
    Matrix materialize() const;

    /// Number of groups for the distinct-column/row encodings, 0 otherwise.
    std::size_t group_count() const noexcept;
    /// B_j = |Q+_j| + |Q-_j| for a RowChange mask.
    std::size_t row_change_cost(std::size_t j) const;

  private:
    explicit MaskSpec(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

} // namespace convbasis
