#pragma once

#include <cstddef>

#include "convbasis/matrix.hpp"
#include "convbasis/recovery.hpp"

namespace convbasis {

/// Loss L(X) = 0.5 || D(X)^{-1} (M o exp(A1 X A2^T)) A3 Y - E ||_F^2 with the
/// causal mask M. A1, A2, A3, E are n x d; X, Y are d x d.
struct TrainingInstance {
    Matrix A1, A2, A3;
    Matrix X, Y;
    Matrix E;

    std::size_t n() const noexcept { return A1.rows(); }
    std::size_t d() const noexcept { return A1.cols(); }
    void validate() const;
};

/// Columns of u = M o exp(A1 X A2^T); A1 X is formed once.
ColumnOracle u_column_oracle(const TrainingInstance &inst);

/// Dense intermediates of the loss: u, alpha = u 1, f = diag(alpha)^{-1} u,
/// h = A3 Y, c = f h - E, q = c h^T, r_j = <f_j, q_j>, p = f o q - diag(r) f.
/// Quadratic memory; used as the reference for the fast path.
struct DenseGradientParts {
    Matrix u, f, h, c, q, p;
    Vector alpha, r;
};
DenseGradientParts dense_gradient_parts(const TrainingInstance &inst);

double loss(const TrainingInstance &inst);

/// dL/dX = A1^T p A2 from dense intermediates.
Matrix naive_gradient(const TrainingInstance &inst);

struct FastGradientOptions {
    /// p = p1 + p2_sign * p2. Only the verification suite changes this.
    double p2_sign = -1.0;
};

/// dL/dX using the k-conv basis of u recovered from column queries. params
/// describe u itself.
Matrix fast_gradient(const TrainingInstance &inst, const NonDegenSpec &params,
                     const FastGradientOptions &options = {});

struct TrainingForward {
    Matrix residual;
    double loss = 0.0;
};

/// Residual D^{-1} u A3 Y - E and the loss, with u taken from its recovered
/// k-conv basis.
TrainingForward training_forward(const TrainingInstance &inst, const NonDegenSpec &params);

/// Row-major vectorization: vect(A)[i * cols + j] = A_ij.
Vector vect(const Matrix &a);
Matrix kronecker(const Matrix &a, const Matrix &b);

struct KronCheckReport {
    double max_abs_error = 0.0;
    double vect_outer_error = 0.0;
    bool passed = false;
};

/// Materializes A1 (x) A2 and checks vect(A1 X A2^T) = (A1 (x) A2) vect(X)
/// and vect(a b^T) = a (x) b for the first columns of A1 and A2.
KronCheckReport kron_vect_check(const Matrix &A1, const Matrix &X, const Matrix &A2);

} // namespace convbasis
