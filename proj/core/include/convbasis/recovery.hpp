#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "convbasis/conv.hpp"
#include "convbasis/mask.hpp"
#include "convbasis/matrix.hpp"

namespace convbasis {

/// Recovery hyper-parameters: k terms, onset window floor T, separation
/// delta and noise level epsilon.
struct NonDegenSpec {
    std::size_t k = 1;
    std::size_t T = 1;
    double delta = 0.0;
    double epsilon = 0.0;

    /// delta - 2 T epsilon, the onset detection threshold.
    double threshold() const noexcept {
        return delta - 2.0 * static_cast<double>(T) * epsilon;
    }
    /// Checks ranges against dimension n, including epsilon <= delta / (5T).
    void validate(std::size_t n) const;
};

/// Column access to an implicit n x n matrix with a query counter.
/// Copies share the counter.
class ColumnOracle {
  public:
    using Query = std::function<Vector(std::size_t)>;

    ColumnOracle(std::size_t n, Query query);

    std::size_t n() const noexcept { return n_; }
    Vector query(std::size_t j) const;
    std::size_t query_count() const noexcept { return *count_; }

  private:
    std::size_t n_;
    Query query_;
    std::shared_ptr<std::size_t> count_;
};

/// M_j o (Q K_j^T), O(nd).
Vector column_from_qk(const Matrix &Q, const Matrix &K, const MaskSpec &mask,
                      std::size_t j);

/// Oracle over M o (Q K^T); Q and K are copied into the oracle.
ColumnOracle qk_column_oracle(const Matrix &Q, const Matrix &K, const MaskSpec &mask);

/// Oracle over an explicit matrix, for tests and noise-injected fixtures.
ColumnOracle dense_column_oracle(const Matrix &h);

/// ||(H_j)[j, j+T) - v||_1, one oracle query.
double onset_score(const ColumnOracle &oracle, std::span<const double> v, std::size_t j);

/// Binary search for the first column in [s, t] whose onset score reaches
/// params.threshold(). Returns s when s >= t.
std::size_t search(const ColumnOracle &oracle, const NonDegenSpec &params,
                   std::span<const double> v, std::size_t s, std::size_t t);

struct RecoveryResult {
    /// Recovered b' terms as read from the oracle (windows m_1 > ... > m_k).
    ConvBasis raw;
    /// Basis of M o exp(raw); see masked_exp_basis().
    ConvBasis exp;
    std::size_t column_queries = 0;

    std::vector<std::size_t> windows() const { return raw.windows(); }
    std::string to_json() const;
};

/// Basis of M o exp(H) for a raw basis H. When m_1 < n the leading columns
/// of H are zero and exp maps them to one, so an all-zero term of window n
/// is prepended before exp_transform.
ConvBasis masked_exp_basis(const ConvBasis &raw);

/// Recovers params.k terms from column queries. Throws UnderRankError when
/// the column range is exhausted first.
RecoveryResult recover(const ColumnOracle &oracle, const NonDegenSpec &params);
RecoveryResult recover(const Matrix &Q, const Matrix &K, const MaskSpec &mask,
                       const NonDegenSpec &params);

/// k (ceil(log2 n) + 2).
std::size_t query_budget(std::size_t n, std::size_t k);

} // namespace convbasis
