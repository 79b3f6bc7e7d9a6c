#include "convbasis/recovery.hpp"

#include <bit>
#include <cmath>

#include "convbasis/attention.hpp"
#include "convbasis/error.hpp"
#include "json.hpp"

namespace convbasis {

void NonDegenSpec::validate(std::size_t n) const {
    if (k < 1 || k > n)
        throw InvalidArgument("k must lie in [1, n]");
    if (T < 1 || T > n)
        throw InvalidArgument("T must lie in [1, n]");
    if (!(delta >= 0.0) || !(epsilon >= 0.0) || !std::isfinite(delta) ||
        !std::isfinite(epsilon))
        throw InvalidArgument("delta and epsilon must be finite and nonnegative");
    if (epsilon > delta / (5.0 * static_cast<double>(T)))
        throw InvalidArgument("epsilon exceeds delta / (5T)");
}

ColumnOracle::ColumnOracle(std::size_t n, Query query)
    : n_(n), query_(std::move(query)), count_(std::make_shared<std::size_t>(0)) {
    if (n_ == 0)
        throw InvalidArgument("column oracle dimension must be positive");
    if (!query_)
        throw InvalidArgument("column oracle needs a query function");
}

Vector ColumnOracle::query(std::size_t j) const {
    if (j >= n_)
        throw InvalidArgument("column " + std::to_string(j) + " out of range");
    ++*count_;
    Vector col = query_(j);
    if (col.size() != n_)
        throw ConsistencyError("column oracle returned a vector of wrong length");
    return col;
}

Vector column_from_qk(const Matrix &Q, const Matrix &K, const MaskSpec &mask,
                      std::size_t j) {
    return masked_score_column(Q, K, mask, j);
}

ColumnOracle qk_column_oracle(const Matrix &Q, const Matrix &K, const MaskSpec &mask) {
    if (Q.rows() != K.rows() || Q.cols() != K.cols() || mask.n() != Q.rows())
        throw InvalidArgument("qk_column_oracle: dimension mismatch");
    return ColumnOracle(Q.rows(), [Q, K, mask](std::size_t j) {
        return masked_score_column(Q, K, mask, j);
    });
}

ColumnOracle dense_column_oracle(const Matrix &h) {
    if (h.rows() != h.cols())
        throw InvalidArgument("dense_column_oracle: matrix must be square");
    return ColumnOracle(h.rows(), [h](std::size_t j) { return h.column(j); });
}

namespace {

double score_from_column(std::span<const double> col, std::span<const double> v,
                         std::size_t j) {
    double a = 0.0;
    for (std::size_t p = 0; p < v.size(); ++p)
        a += std::abs(col[j + p] - v[p]);
    return a;
}

} // namespace

double onset_score(const ColumnOracle &oracle, std::span<const double> v, std::size_t j) {
    if (j + v.size() > oracle.n())
        throw InvalidArgument("onset window runs past the last row");
    const Vector col = oracle.query(j);
    return score_from_column(col, v, j);
}

std::size_t search(const ColumnOracle &oracle, const NonDegenSpec &params,
                   std::span<const double> v, std::size_t s, std::size_t t) {
    if (v.size() != params.T)
        throw InvalidArgument("search: |v| must equal T");
    const double thr = params.threshold();
    while (s < t) {
        const std::size_t j = s + (t - s) / 2;
        if (onset_score(oracle, v, j) >= thr)
            t = j;
        else
            s = j + 1;
    }
    return s;
}

ConvBasis masked_exp_basis(const ConvBasis &raw) {
    const std::size_t n = raw.n();
    if (raw.k() == 0)
        return ConvBasis(n, {{Vector(n, 1.0), n}});
    if (raw.terms().front().m == n)
        return exp_transform(raw);
    std::vector<SubConvTerm> padded;
    padded.reserve(raw.k() + 1);
    padded.push_back({Vector(n, 0.0), n});
    padded.insert(padded.end(), raw.terms().begin(), raw.terms().end());
    return exp_transform(ConvBasis(n, std::move(padded)));
}

RecoveryResult recover(const ColumnOracle &oracle, const NonDegenSpec &params) {
    const std::size_t n = oracle.n();
    params.validate(n);
    const std::size_t T = params.T;
    const std::size_t t = n - T;
    const std::size_t before = oracle.query_count();
    const double thr = params.threshold();

    Vector v(T, 0.0);
    Vector u(n, 0.0);
    std::vector<SubConvTerm> terms;
    std::size_t start = 0;
    for (std::size_t loop = 0; loop < params.k; ++loop) {
        if (start > t)
            throw UnderRankError("column range exhausted after " +
                                     std::to_string(terms.size()) + " terms",
                                 terms.size());
        const std::size_t s = search(oracle, params, v, start, t);
        const Vector col = oracle.query(s);
        if (score_from_column(col, v, s) < thr)
            throw UnderRankError("no further onset found after " +
                                     std::to_string(terms.size()) + " terms",
                                 terms.size());
        const std::size_t m = n - s;
        if (!terms.empty() && m >= terms.back().m)
            throw ConsistencyError("recovered windows are not strictly decreasing");
        SubConvTerm term{Vector(n, 0.0), m};
        for (std::size_t p = 0; p < m; ++p)
            term.b[p] = col[s + p] - u[p];
        for (std::size_t p = 0; p < T; ++p)
            v[p] += term.b[p];
        for (std::size_t p = 0; p < m; ++p)
            u[p] += term.b[p];
        terms.push_back(std::move(term));
        start = s + 1;
    }
    RecoveryResult res;
    res.raw = ConvBasis(n, std::move(terms));
    res.exp = masked_exp_basis(res.raw);
    res.column_queries = oracle.query_count() - before;
    return res;
}

RecoveryResult recover(const Matrix &Q, const Matrix &K, const MaskSpec &mask,
                       const NonDegenSpec &params) {
    return recover(qk_column_oracle(Q, K, mask), params);
}

std::size_t query_budget(std::size_t n, std::size_t k) {
    const auto log2n = static_cast<std::size_t>(std::bit_width(n - 1));
    return k * (log2n + 2);
}

std::string RecoveryResult::to_json() const {
    nlohmann::json j;
    j["n"] = raw.n();
    j["k"] = raw.k();
    j["windows"] = raw.windows();
    j["queries"] = column_queries;
    std::vector<double> norms;
    for (const auto &t : raw.terms())
        norms.push_back(l1_vec(std::span(t.b).first(t.m)));
    j["l1_norms"] = norms;
    return j.dump(2);
}

} // namespace convbasis
