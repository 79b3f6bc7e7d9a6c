#include "convbasis/conv_attention.hpp"

#include <cmath>
#include <string>

#include "convbasis/error.hpp"

namespace convbasis {

namespace {

Matrix divide_rows(const std::vector<Vector> &numerators, const Vector &denom,
                   std::size_t n) {
    Matrix Y(n, numerators.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!(denom[i] > 0.0))
            throw NormalizationError("attention row " + std::to_string(i) +
                                         " has non-positive normalizer",
                                     i);
        for (std::size_t c = 0; c < numerators.size(); ++c)
            Y(i, c) = numerators[c][i] / denom[i];
    }
    return Y;
}

} // namespace

Matrix apply_conv_attention(const ConvBasis &a, const Matrix &V) {
    const std::size_t n = a.n();
    if (V.rows() != n)
        throw InvalidArgument("apply_conv_attention: V has wrong row count");
    const Vector ones(n, 1.0);
    const Vector denom = basis_matvec(a, ones);
    std::vector<Vector> numerators;
    numerators.reserve(V.cols());
    for (std::size_t c = 0; c < V.cols(); ++c)
        numerators.push_back(basis_matvec(a, V.column(c)));
    return divide_rows(numerators, denom, n);
}

Matrix conv_forward(const AttentionInput &input, const NonDegenSpec &params,
                    RecoveryResult &recovery) {
    input.validate();
    recovery = recover(input.Q, input.K, MaskSpec::causal(input.n()), params);
    return apply_conv_attention(recovery.exp, input.V);
}

Matrix conv_forward(const AttentionInput &input, const NonDegenSpec &params) {
    RecoveryResult unused;
    return conv_forward(input, params, unused);
}

NonDegenSpec exact_params(std::size_t n) {
    return NonDegenSpec{n, 1, 0.0, 0.0};
}

Matrix exact_forward_via_conv(const AttentionInput &input) {
    input.validate();
    return conv_forward(input, exact_params(input.n()));
}

Matrix full_self_attention_forward(const AttentionInput &input,
                                   const NonDegenSpec &lower,
                                   const NonDegenSpec &upper) {
    input.validate();
    const std::size_t n = input.n();
    const auto causal = MaskSpec::causal(n);
    const auto low = recover(input.Q, input.K, causal, lower);
    const auto up = recover(input.K, input.Q, causal, upper);

    // The diagonal is counted by both triangles; drop it from the upper one.
    Vector diag(n);
    for (std::size_t i = 0; i < n; ++i)
        diag[i] = entry(up.exp, i, i);

    auto combined = [&](std::span<const double> x) {
        Vector y = basis_matvec(low.exp, x);
        const Vector yu = basis_transpose_matvec(up.exp, x);
        for (std::size_t i = 0; i < n; ++i)
            y[i] += yu[i] - diag[i] * x[i];
        return y;
    };

    const Vector denom = combined(Vector(n, 1.0));
    std::vector<Vector> numerators;
    numerators.reserve(input.V.cols());
    for (std::size_t c = 0; c < input.V.cols(); ++c)
        numerators.push_back(combined(input.V.column(c)));
    return divide_rows(numerators, denom, n);
}

double conv_error_bound(double epsilon, const Matrix &V) {
    if (!(epsilon >= 0.0))
        throw InvalidArgument("epsilon must be nonnegative");
    return 2.0 * std::expm1(2.0 * epsilon) * linf_norm(V);
}

} // namespace convbasis
