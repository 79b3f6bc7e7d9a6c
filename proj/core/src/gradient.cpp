#include "convbasis/gradient.hpp"

#include <cmath>
#include <string>

#include "convbasis/attention.hpp"
#include "convbasis/conv.hpp"
#include "convbasis/conv_attention.hpp"
#include "convbasis/error.hpp"

namespace convbasis {

void TrainingInstance::validate() const {
    if (A1.empty() || A2.empty() || A3.empty() || X.empty() || Y.empty() || E.empty())
        throw InvalidArgument("training instance: empty matrix");
    const std::size_t n = A1.rows(), d = A1.cols();
    auto check = [](const Matrix &m, std::size_t r, std::size_t c, const char *name) {
        if (m.rows() != r || m.cols() != c)
            throw InvalidArgument(std::string("training instance: ") + name +
                                  " has shape " + std::to_string(m.rows()) + "x" +
                                  std::to_string(m.cols()) + ", expected " +
                                  std::to_string(r) + "x" + std::to_string(c));
    };
    check(A2, n, d, "A2");
    check(A3, n, d, "A3");
    check(X, d, d, "X");
    check(Y, d, d, "Y");
    check(E, n, d, "E");
}

namespace {

double guarded_exp(double s) {
    if (s > kExpScoreLimit)
        throw OverflowError("score " + std::to_string(s) + " exceeds exp limit");
    return std::exp(s);
}

} // namespace

ColumnOracle u_column_oracle(const TrainingInstance &inst) {
    inst.validate();
    const Matrix A1X = matmul(inst.A1, inst.X);
    const Matrix A2 = inst.A2;
    const std::size_t n = inst.n();
    return ColumnOracle(n, [A1X, A2, n](std::size_t j) {
        Vector col(n, 0.0);
        const auto k = A2.row(j);
        for (std::size_t i = j; i < n; ++i) {
            const auto q = A1X.row(i);
            double s = 0.0;
            for (std::size_t c = 0; c < q.size(); ++c)
                s += q[c] * k[c];
            col[i] = guarded_exp(s);
        }
        return col;
    });
}

DenseGradientParts dense_gradient_parts(const TrainingInstance &inst) {
    inst.validate();
    const std::size_t n = inst.n();
    DenseGradientParts g;
    const Matrix S = matmul(matmul(inst.A1, inst.X), inst.A2.transposed());
    g.u = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            g.u(i, j) = guarded_exp(S(i, j));
    g.alpha = Vector(n, 0.0);
    g.f = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j)
            g.alpha[i] += g.u(i, j);
        for (std::size_t j = 0; j <= i; ++j)
            g.f(i, j) = g.u(i, j) / g.alpha[i];
    }
    g.h = matmul(inst.A3, inst.Y);
    g.c = matmul(g.f, g.h) - inst.E;
    g.q = matmul(g.c, g.h.transposed());
    g.r = Vector(n, 0.0);
    g.p = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            g.r[i] += g.f(i, j) * g.q(i, j);
        for (std::size_t j = 0; j < n; ++j)
            g.p(i, j) = g.f(i, j) * g.q(i, j) - g.r[i] * g.f(i, j);
    }
    return g;
}

double loss(const TrainingInstance &inst) {
    const auto g = dense_gradient_parts(inst);
    const double fro = frobenius_norm(g.c);
    return 0.5 * fro * fro;
}

Matrix naive_gradient(const TrainingInstance &inst) {
    const auto g = dense_gradient_parts(inst);
    return matmul(matmul(inst.A1.transposed(), g.p), inst.A2);
}

namespace {

/// f w = (u w) / (u 1) with u given by its conv basis.
struct FOperator {
    const ConvBasis &u;
    Vector alpha;

    explicit FOperator(const ConvBasis &basis)
        : u(basis), alpha(basis_matvec(basis, Vector(basis.n(), 1.0))) {
        for (std::size_t i = 0; i < alpha.size(); ++i)
            if (!(alpha[i] > 0.0))
                throw NormalizationError("u row " + std::to_string(i) +
                                             " has non-positive sum",
                                         i);
    }

    Vector apply(std::span<const double> w) const {
        Vector y = basis_matvec(u, w);
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] /= alpha[i];
        return y;
    }
};

} // namespace

Matrix fast_gradient(const TrainingInstance &inst, const NonDegenSpec &params,
                     const FastGradientOptions &options) {
    inst.validate();
    const std::size_t n = inst.n(), d = inst.d();
    const auto rec = recover(u_column_oracle(inst), params);
    const FOperator f(rec.raw);

    const Matrix h = matmul(inst.A3, inst.Y);
    std::vector<Vector> hcols, ccols;
    for (std::size_t i = 0; i < d; ++i) {
        hcols.push_back(h.column(i));
        Vector fh = f.apply(hcols.back());
        for (std::size_t row = 0; row < n; ++row)
            fh[row] -= inst.E(row, i);
        ccols.push_back(std::move(fh));
    }
    // r_j = <f_j, q_j> = sum_i c_{j,i} (f h_i)_j and f h_i = c_i + E_i.
    Vector r(n, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t row = 0; row < n; ++row)
            r[row] += ccols[i][row] * (ccols[i][row] + inst.E(row, i));

    // P = p A2 column by column, p w = sum_i diag(c_i) f diag(h_i) w + sign diag(r) f w.
    Matrix P(n, d);
    Vector scaled(n);
    for (std::size_t col = 0; col < d; ++col) {
        const Vector w = inst.A2.column(col);
        Vector pw(n, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t row = 0; row < n; ++row)
                scaled[row] = hcols[i][row] * w[row];
            const Vector fw = f.apply(scaled);
            for (std::size_t row = 0; row < n; ++row)
                pw[row] += ccols[i][row] * fw[row];
        }
        const Vector fw = f.apply(w);
        for (std::size_t row = 0; row < n; ++row)
            P(row, col) = pw[row] + options.p2_sign * r[row] * fw[row];
    }
    return matmul(inst.A1.transposed(), P);
}

TrainingForward training_forward(const TrainingInstance &inst, const NonDegenSpec &params) {
    inst.validate();
    const auto rec = recover(u_column_oracle(inst), params);
    const Matrix Z = apply_conv_attention(rec.raw, inst.A3);
    TrainingForward out;
    out.residual = matmul(Z, inst.Y) - inst.E;
    const double fro = frobenius_norm(out.residual);
    out.loss = 0.5 * fro * fro;
    return out;
}

Vector vect(const Matrix &a) {
    return Vector(a.data().begin(), a.data().end());
}

Matrix kronecker(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t p = 0; p < b.rows(); ++p)
                for (std::size_t q = 0; q < b.cols(); ++q)
                    out(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
    return out;
}

KronCheckReport kron_vect_check(const Matrix &A1, const Matrix &X, const Matrix &A2) {
    const std::size_t n = A1.rows(), d = A1.cols();
    if (A2.rows() != n || A2.cols() != d || X.rows() != d || X.cols() != d)
        throw InvalidArgument("kron_vect_check: dimension mismatch");
    if (static_cast<double>(n) * n * d * d > 1e6)
        throw InvalidArgument("kron_vect_check: Kronecker product too large");
    KronCheckReport rep;
    const Vector lhs = vect(matmul(matmul(A1, X), A2.transposed()));
    const Vector rhs = matvec(kronecker(A1, A2), vect(X));
    rep.max_abs_error = max_abs_diff(lhs, rhs);

    const Matrix a = Matrix::from_columns(std::vector<Vector>{A1.column(0)});
    const Matrix b = Matrix::from_columns(std::vector<Vector>{A2.column(0)});
    const Vector outer = vect(matmul(a, b.transposed()));
    const Vector kab = vect(kronecker(a, b));
    rep.vect_outer_error = max_abs_diff(outer, kab);
    rep.passed = rep.max_abs_error <= 1e-12 * std::max(1.0, linf_vec(lhs)) &&
                 rep.vect_outer_error <= 1e-12 * std::max(1.0, linf_vec(outer));
    return rep;
}

} // namespace convbasis
