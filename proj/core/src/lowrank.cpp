#include "convbasis/lowrank.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "convbasis/error.hpp"
#include "convbasis/fft.hpp"

namespace convbasis {

void LowRankFactors::validate() const {
    if (U1.empty() || U2.empty())
        throw InvalidArgument("low-rank factors: empty matrix");
    if (U1.rows() != U2.rows() || U1.cols() != U2.cols())
        throw InvalidArgument("low-rank factors: U1 and U2 must share n and k");
}

namespace {

void check_input(const LowRankFactors &f, std::span<const double> v) {
    f.validate();
    if (v.size() != f.n())
        throw InvalidArgument("low-rank matvec: |v| != n");
}

template <class T>
const T &require_variant(const MaskSpec &mask, const char *what) {
    const T *p = std::get_if<T>(&mask.variant());
    if (p == nullptr)
        throw InvalidArgument(std::string(what) + ": mask is " + mask.kind());
    return *p;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] += a * x[i];
}

} // namespace

Vector causal_matvec(const LowRankFactors &f, std::span<const double> v) {
    check_input(f, v);
    const std::size_t n = f.n();
    Vector c(f.k(), 0.0);
    Vector y(n);
    for (std::size_t j = 0; j < n; ++j) {
        axpy(v[j], f.U2.row(j), c);
        y[j] = dot(f.U1.row(j), c);
    }
    return y;
}

Vector rowchange_matvec(const LowRankFactors &f, const MaskSpec &mask,
                        std::span<const double> v) {
    check_input(f, v);
    const auto &m = require_variant<RowChangeMask>(mask, "rowchange_matvec");
    if (m.n != f.n())
        throw InvalidArgument("rowchange_matvec: mask dimension mismatch");
    Vector c(f.k(), 0.0);
    Vector y(m.n);
    for (std::size_t j = 0; j < m.n; ++j) {
        for (std::size_t i : m.added[j])
            axpy(v[i], f.U2.row(i), c);
        for (std::size_t i : m.removed[j])
            axpy(-v[i], f.U2.row(i), c);
        y[j] = dot(f.U1.row(j), c);
    }
    return y;
}

SegmentTree::SegmentTree(const Matrix &values)
    : n_(values.rows()), leaves_(next_power_of_two(values.rows())), k_(values.cols()),
      nodes_(2 * leaves_ * k_, 0.0) {
    for (std::size_t i = 0; i < n_; ++i)
        std::copy_n(values.row(i).begin(), k_, nodes_.begin() + static_cast<long>((leaves_ + i) * k_));
    for (std::size_t i = leaves_ - 1; i >= 1; --i)
        for (std::size_t c = 0; c < k_; ++c)
            nodes_[i * k_ + c] = nodes_[2 * i * k_ + c] + nodes_[(2 * i + 1) * k_ + c];
}

std::vector<std::size_t> SegmentTree::cover(std::size_t lo, std::size_t hi) const {
    if (lo > hi || hi >= n_)
        throw InvalidArgument("segment tree: invalid range");
    std::vector<std::size_t> left, right;
    std::size_t l = lo + leaves_, r = hi + leaves_ + 1;
    while (l < r) {
        if (l & 1)
            left.push_back(l++);
        if (r & 1)
            right.push_back(--r);
        l >>= 1;
        r >>= 1;
    }
    left.insert(left.end(), right.rbegin(), right.rend());
    return left;
}

std::span<const double> SegmentTree::node(std::size_t i) const {
    return {nodes_.data() + i * k_, k_};
}

Vector SegmentTree::range_sum(std::size_t lo, std::size_t hi) const {
    Vector s(k_, 0.0);
    for (std::size_t idx : cover(lo, hi))
        axpy(1.0, node(idx), s);
    return s;
}

Vector continuous_matvec(const LowRankFactors &f, const MaskSpec &mask,
                         std::span<const double> v) {
    check_input(f, v);
    const auto &m = require_variant<ContinuousRowMask>(mask, "continuous_matvec");
    const std::size_t n = f.n();
    if (m.start.size() != n)
        throw InvalidArgument("continuous_matvec: mask dimension mismatch");
    Matrix leaves(n, f.k());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < f.k(); ++c)
            leaves(i, c) = f.U2(i, c) * v[i];
    const SegmentTree tree(leaves);
    Vector y(n);
    for (std::size_t j = 0; j < n; ++j)
        y[j] = dot(f.U1.row(j), tree.range_sum(m.start[j], m.end[j]));
    return y;
}

Vector distinct_columns_matvec(const LowRankFactors &f, const MaskSpec &mask,
                               std::span<const double> v) {
    check_input(f, v);
    const auto &m = require_variant<DistinctColumnsMask>(mask, "distinct_columns_matvec");
    const std::size_t n = f.n(), k = f.k();
    if (m.group.size() != n)
        throw InvalidArgument("distinct_columns_matvec: mask dimension mismatch");
    // sums[g] = (U2^T)_{*,S_g} v_{S_g}
    std::vector<Vector> sums(m.prototype.size(), Vector(k, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        axpy(v[i], f.U2.row(i), sums[m.group[i]]);
    Vector y(n, 0.0);
    for (std::size_t g = 0; g < sums.size(); ++g)
        for (std::size_t i = 0; i < n; ++i)
            if (m.prototype[g][i])
                y[i] += dot(f.U1.row(i), sums[g]);
    return y;
}

Vector distinct_rows_matvec(const LowRankFactors &f, const MaskSpec &mask,
                            std::span<const double> v) {
    check_input(f, v);
    const auto &m = require_variant<DistinctRowsMask>(mask, "distinct_rows_matvec");
    const std::size_t n = f.n(), k = f.k();
    if (m.group.size() != n)
        throw InvalidArgument("distinct_rows_matvec: mask dimension mismatch");
    std::vector<Vector> sums(m.prototype.size(), Vector(k, 0.0));
    for (std::size_t g = 0; g < sums.size(); ++g)
        for (std::size_t i = 0; i < n; ++i)
            if (m.prototype[g][i])
                axpy(v[i], f.U2.row(i), sums[g]);
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = dot(f.U1.row(i), sums[m.group[i]]);
    return y;
}

Vector masked_lowrank_matvec(const LowRankFactors &f, const MaskSpec &mask,
                             std::span<const double> v) {
    if (mask.n() != f.n())
        throw InvalidArgument("masked_lowrank_matvec: mask dimension mismatch");
    switch (mask.variant().index()) {
    case 0:
        return causal_matvec(f, v);
    case 1:
        return rowchange_matvec(f, mask, v);
    case 2:
        return continuous_matvec(f, mask, v);
    case 3:
        return distinct_columns_matvec(f, mask, v);
    case 4:
        return distinct_rows_matvec(f, mask, v);
    default:
        return rowchange_matvec(f, MaskSpec::row_change_from_dense(mask.materialize()), v);
    }
}

Matrix masked_lowrank_attention(const LowRankFactors &f, const MaskSpec &mask,
                                const Matrix &V) {
    f.validate();
    const std::size_t n = f.n();
    if (V.rows() != n)
        throw InvalidArgument("masked_lowrank_attention: V has wrong row count");
    const MaskSpec resolved = std::holds_alternative<DenseMask>(mask.variant())
                                  ? MaskSpec::row_change_from_dense(mask.materialize())
                                  : mask;
    const Vector denom = masked_lowrank_matvec(f, resolved, Vector(n, 1.0));
    // Support sizes are small integers, so an empty row yields exactly zero here.
    const LowRankFactors counter{Matrix::constant(n, 1, 1.0), Matrix::constant(n, 1, 1.0)};
    const Vector support = masked_lowrank_matvec(counter, resolved, Vector(n, 1.0));
    for (std::size_t i = 0; i < n; ++i)
        if (support[i] < 0.5 || denom[i] == 0.0 || !std::isfinite(denom[i]))
            throw NormalizationError("low-rank attention row " + std::to_string(i) +
                                         " has zero normalizer",
                                     i);
    Matrix Y(n, V.cols());
    for (std::size_t c = 0; c < V.cols(); ++c) {
        const Vector num = masked_lowrank_matvec(f, resolved, V.column(c));
        for (std::size_t i = 0; i < n; ++i)
            Y(i, c) = num[i] / denom[i];
    }
    return Y;
}

RankKFit best_rank_k_factors(const Matrix &h, std::size_t k) {
    const std::size_t n = h.rows();
    if (h.cols() != n)
        throw InvalidArgument("best_rank_k_factors: matrix must be square");
    if (k < 1 || k > n)
        throw InvalidArgument("best_rank_k_factors: k must lie in [1, n]");
    for (double x : h.data())
        if (!(x > 0.0))
            throw InvalidArgument("best_rank_k_factors: matrix must be strictly positive");

    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = h(i, j);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto &U = svd.matrixU();
    const auto &Vm = svd.matrixV();
    const auto &S = svd.singularValues();

    RankKFit fit{{Matrix(n, k), Matrix(n, k)}, 0.0};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            const auto ei = static_cast<Eigen::Index>(i), ec = static_cast<Eigen::Index>(c);
            fit.factors.U1(i, c) = U(ei, ec) * S(ec);
            fit.factors.U2(i, c) = Vm(ei, ec);
        }
    const Matrix approx = matmul(fit.factors.U1, fit.factors.U2.transposed());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            fit.achieved = std::max(fit.achieved, std::abs(approx(i, j) - h(i, j)) / h(i, j));
    return fit;
}

LowRankFactors epsk_fixture_factors(const Matrix &h, std::size_t k, double epsilon) {
    if (!(epsilon >= 0.0))
        throw InvalidArgument("epsk_fixture_factors: epsilon must be nonnegative");
    auto fit = best_rank_k_factors(h, k);
    if (fit.achieved > epsilon)
        throw FixtureError("rank-" + std::to_string(k) + " factors reach relative error " +
                               std::to_string(fit.achieved) + " > " + std::to_string(epsilon),
                           fit.achieved);
    return std::move(fit.factors);
}

} // namespace convbasis
