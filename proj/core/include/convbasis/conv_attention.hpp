#pragma once

#include "convbasis/attention.hpp"
#include "convbasis/conv.hpp"
#include "convbasis/recovery.hpp"

namespace convbasis {

/// D^{-1} A V where A = basis_to_dense(a) is never formed: the numerator
/// takes one basis matvec per column of V and D one more with the ones vector.
Matrix apply_conv_attention(const ConvBasis &a, const Matrix &V);

/// Causal attention through recovery of the k-conv basis of M o (Q K^T).
Matrix conv_forward(const AttentionInput &input, const NonDegenSpec &params);
/// Same, returning the recovery alongside the output.
Matrix conv_forward(const AttentionInput &input, const NonDegenSpec &params,
                    RecoveryResult &recovery);

/// Parameters under which recovery reads every column: k = n, T = 1,
/// delta = epsilon = 0.
NonDegenSpec exact_params(std::size_t n);

/// Exact causal attention through the conv pipeline.
Matrix exact_forward_via_conv(const AttentionInput &input);

/// Unmasked attention. The lower triangle (with diagonal) uses the basis of
/// M o (Q K^T) and the upper triangle the basis of M o (K Q^T) applied
/// transposed; both numerators and normalizers are summed before dividing.
Matrix full_self_attention_forward(const AttentionInput &input,
                                   const NonDegenSpec &lower,
                                   const NonDegenSpec &upper);

/// 2 (exp(2 epsilon) - 1) ||V||_inf
double conv_error_bound(double epsilon, const Matrix &V);

} // namespace convbasis
