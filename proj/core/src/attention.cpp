#include "convbasis/attention.hpp"

#include <cmath>
#include <string>

#include "convbasis/error.hpp"

namespace convbasis {

void AttentionInput::validate() const {
    if (Q.empty() || K.empty() || V.empty())
        throw InvalidArgument("attention input: empty matrix");
    if (K.rows() != Q.rows() || V.rows() != Q.rows())
        throw InvalidArgument("attention input: Q, K, V must share n");
    if (K.cols() != Q.cols())
        throw InvalidArgument("attention input: Q and K must share d");
}

Matrix normalized_apply(const Matrix &weights, const Matrix &V) {
    if (weights.cols() != V.rows())
        throw InvalidArgument("normalized_apply: dimension mismatch");
    const std::size_t n = weights.rows();
    Matrix Y(n, V.cols());
    for (std::size_t i = 0; i < n; ++i) {
        double denom = 0.0;
        auto w = weights.row(i);
        for (double x : w)
            denom += x;
        if (!(denom > 0.0))
            throw NormalizationError("attention row " + std::to_string(i) +
                                         " has non-positive normalizer",
                                     i);
        auto y = Y.row(i);
        for (std::size_t l = 0; l < w.size(); ++l) {
            if (w[l] == 0.0)
                continue;
            auto v = V.row(l);
            for (std::size_t c = 0; c < y.size(); ++c)
                y[c] += w[l] * v[c];
        }
        for (double &x : y)
            x /= denom;
    }
    return Y;
}

Matrix softmax_attention_from_scores(const Matrix &scores, const MaskSpec &mask,
                                     const Matrix &V) {
    const std::size_t n = scores.rows();
    if (scores.cols() != n || mask.n() != n || V.rows() != n)
        throw InvalidArgument("softmax_attention_from_scores: dimension mismatch");
    Matrix A(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto support = mask.row_support(i);
        if (support.empty())
            throw NormalizationError("mask row " + std::to_string(i) + " is all zero", i);
        for (std::size_t j : support) {
            const double s = scores(i, j);
            if (s > kExpScoreLimit)
                throw OverflowError("score " + std::to_string(s) + " at (" +
                                    std::to_string(i) + "," + std::to_string(j) +
                                    ") exceeds exp limit");
            A(i, j) = std::exp(s);
        }
    }
    return normalized_apply(A, V);
}

Matrix naive_masked_attention(const AttentionInput &input, const MaskSpec &mask,
                              double scale) {
    input.validate();
    if (!(scale > 0.0))
        throw InvalidArgument("attention scale must be positive");
    if (mask.n() != input.n())
        throw InvalidArgument("mask dimension does not match input");
    Matrix S = scale * matmul(input.Q, input.K.transposed());
    return softmax_attention_from_scores(S, mask, input.V);
}

Vector masked_score_column(const Matrix &Q, const Matrix &K, const MaskSpec &mask,
                           std::size_t j) {
    const std::size_t n = Q.rows();
    if (K.rows() != n || K.cols() != Q.cols() || mask.n() != n)
        throw InvalidArgument("masked_score_column: dimension mismatch");
    if (j >= n)
        throw InvalidArgument("column index " + std::to_string(j) + " out of range");
    const Vector m = mask.column(j);
    const auto kj = K.row(j);
    Vector out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (m[i] == 0.0)
            continue;
        auto q = Q.row(i);
        double s = 0.0;
        for (std::size_t c = 0; c < q.size(); ++c)
            s += q[c] * kj[c];
        out[i] = s;
    }
    return out;
}

} // namespace convbasis
