#include <cmath>

#include "convbasis/attention.hpp"
#include "convbasis/error.hpp"
#include "convbasis/lowrank.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace convbasis;

namespace {

Vector dense_masked(const LowRankFactors &f, const Matrix &bits, const Vector &v) {
    const Matrix S = oracle::dense_product(f.U1, oracle::transpose(f.U2));
    Matrix W(S.rows(), S.cols());
    for (std::size_t i = 0; i < S.rows(); ++i)
        for (std::size_t j = 0; j < S.cols(); ++j)
            W(i, j) = bits(i, j) * S(i, j);
    return oracle::dense_matvec(W, v);
}

LowRankFactors random_factors(oracle::Rng &rng, std::size_t n, std::size_t k) {
    return {rng.mat(n, k), rng.mat(n, k)};
}

std::vector<std::vector<std::uint8_t>> random_prototypes(oracle::Rng &rng, std::size_t r, std::size_t n) {
    std::vector<std::vector<std::uint8_t>> p(r, std::vector<std::uint8_t>(n));
    for (auto &row : p)
        for (auto &b : row)
            b = static_cast<std::uint8_t>(rng.index(0, 1));
    return p;
}

std::vector<std::size_t> random_groups(oracle::Rng &rng, std::size_t n, std::size_t r) {
    std::vector<std::size_t> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = i < r ? i : rng.index(0, r - 1);
    return g;
}

} // namespace

TEST_CASE("causal matvec") {
    const LowRankFactors ones{Matrix::constant(3, 1, 1.0), Matrix::constant(3, 1, 1.0)};
    CHECK(causal_matvec(ones, Vector{1, 1, 1}) == Vector{1, 2, 3});
    CHECK(causal_matvec(ones, Vector{0, 0, 0}) == Vector{0, 0, 0});
    oracle::Rng rng(1);
    const auto f = random_factors(rng, 64, 4);
    const Vector v = rng.vec(64);
    CHECK(oracle::rel_linf(causal_matvec(f, v), dense_masked(f, oracle::causal_bits(64), v)) < 1e-10);
    CHECK_THROWS_AS(causal_matvec(f, Vector(3)), InvalidArgument);
}

TEST_CASE("row-change matvec") {
    oracle::Rng rng(2);
    const std::size_t n = 32;
    const auto f = random_factors(rng, n, 3);
    const Vector v = rng.vec(n);

    std::vector<std::vector<std::size_t>> added(n), removed(n);
    for (std::size_t j = 0; j < n; ++j)
        added[j] = {j};
    const auto causal_rc = MaskSpec::row_change(n, added, removed);
    CHECK(rowchange_matvec(f, causal_rc, v) == causal_matvec(f, v));
    for (std::size_t j = 0; j < n; ++j)
        CHECK(causal_rc.row_change_cost(j) == 1);

    // Band of width 4 encoded by deltas.
    Matrix band(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = (i >= 3 ? i - 3 : 0); j <= i; ++j)
            band(i, j) = 1.0;
    const auto band_rc = MaskSpec::row_change_from_dense(band);
    CHECK(oracle::rel_linf(rowchange_matvec(f, band_rc, v), dense_masked(f, band, v)) < 1e-10);

    // Rows with empty support produce zeros.
    const auto sparse = MaskSpec::row_change(3, {{}, {1}, {}}, {{}, {}, {1}});
    const auto small = random_factors(rng, 3, 2);
    const Vector y = rowchange_matvec(small, sparse, Vector{1, 1, 1});
    CHECK(y[0] == 0.0);
    CHECK(y[2] == 0.0);
    CHECK_THROWS_AS(rowchange_matvec(f, MaskSpec::causal(n), v), InvalidArgument);
}

TEST_CASE("continuous matvec and segment tree") {
    oracle::Rng rng(3);
    const std::size_t n = 64;
    const auto f = random_factors(rng, n, 4);
    const Vector v = rng.vec(n);
    std::vector<std::size_t> s(n), t(n), z(n, 0), id(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = rng.index(0, n - 1);
        t[i] = rng.index(s[i], n - 1);
        id[i] = i;
    }
    const auto mask = MaskSpec::continuous_row(s, t);
    CHECK(oracle::rel_linf(continuous_matvec(f, mask, v), dense_masked(f, mask.materialize(), v)) < 1e-10);
    CHECK(oracle::rel_linf(continuous_matvec(f, MaskSpec::continuous_row(z, id), v), causal_matvec(f, v)) <
          1e-12);
    const Vector diag = continuous_matvec(f, MaskSpec::continuous_row(id, id), v);
    for (std::size_t j = 0; j < n; ++j) {
        double uu = 0.0;
        for (std::size_t c = 0; c < 4; ++c)
            uu += f.U1(j, c) * f.U2(j, c);
        CHECK(diag[j] == doctest::Approx(uu * v[j]).epsilon(1e-12));
    }

    const std::size_t m = 37;
    const Matrix leaves = rng.mat(m, 2);
    const SegmentTree tree(leaves);
    const auto log2 = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(m))));
    for (std::size_t lo = 0; lo < m; ++lo)
        for (std::size_t hi = lo; hi < m; ++hi) {
            CHECK(tree.cover(lo, hi).size() <= 2 * log2);
            const Vector sum = tree.range_sum(lo, hi);
            double ref = 0.0;
            for (std::size_t i = lo; i <= hi; ++i)
                ref += leaves(i, 1);
            CHECK(sum[1] == doctest::Approx(ref).epsilon(1e-12));
        }
    CHECK_THROWS_AS(tree.cover(5, 4), InvalidArgument);
    CHECK_THROWS_AS(tree.cover(0, m), InvalidArgument);
}

TEST_CASE("distinct column and row matvecs") {
    oracle::Rng rng(4);
    const std::size_t n = 32;
    const auto f = random_factors(rng, n, 4);
    const Vector v = rng.vec(n);
    const Vector plain = oracle::dense_matvec(oracle::dense_product(f.U1, oracle::transpose(f.U2)), v);

    const std::vector<std::size_t> one_group(n, 0);
    const std::vector<std::vector<std::uint8_t>> all_ones{std::vector<std::uint8_t>(n, 1)};
    CHECK(oracle::rel_linf(distinct_columns_matvec(f, MaskSpec::distinct_columns(one_group, all_ones), v), plain) <
          1e-12);
    CHECK(oracle::rel_linf(distinct_rows_matvec(f, MaskSpec::distinct_rows(one_group, all_ones), v), plain) < 1e-12);

    for (std::size_t r : {2u, 3u, 7u, 32u}) {
        const auto groups = random_groups(rng, n, r);
        const auto proto = random_prototypes(rng, r, n);
        const auto dc = MaskSpec::distinct_columns(groups, proto);
        const auto dr = MaskSpec::distinct_rows(groups, proto);
        CHECK(oracle::rel_linf(distinct_columns_matvec(f, dc, v), dense_masked(f, dc.materialize(), v)) < 1e-10);
        CHECK(oracle::rel_linf(distinct_rows_matvec(f, dr, v), dense_masked(f, dr.materialize(), v)) < 1e-10);
    }

    // Two row groups with complementary prototypes.
    std::vector<std::size_t> halves(n);
    std::vector<std::vector<std::uint8_t>> comp(2, std::vector<std::uint8_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
        halves[i] = i % 2;
        comp[0][i] = i < n / 2;
        comp[1][i] = i >= n / 2;
    }
    const auto dr = MaskSpec::distinct_rows(halves, comp);
    CHECK(oracle::rel_linf(distinct_rows_matvec(f, dr, v), dense_masked(f, dr.materialize(), v)) < 1e-10);
}

TEST_CASE("dispatch covers every encoding") {
    oracle::Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = rng.index(1, 40), k = rng.index(1, 5);
        const auto f = random_factors(rng, n, k);
        const Vector v = rng.vec(n);
        Matrix bits(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                bits(i, j) = static_cast<double>(rng.index(0, 1));
        const std::size_t r = rng.index(1, n);
        const auto groups = random_groups(rng, n, r);
        const auto proto = random_prototypes(rng, r, n);
        std::vector<std::size_t> s(n), t(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = rng.index(0, n - 1);
            t[i] = rng.index(s[i], n - 1);
        }
        for (const auto &mask : {MaskSpec::causal(n), MaskSpec::dense(bits), MaskSpec::row_change_from_dense(bits),
                                 MaskSpec::continuous_row(s, t), MaskSpec::distinct_columns(groups, proto),
                                 MaskSpec::distinct_rows(groups, proto)})
            CHECK(oracle::rel_linf(masked_lowrank_matvec(f, mask, v), dense_masked(f, mask.materialize(), v)) <
                  1e-10);
    }
}

TEST_CASE("masked low-rank attention") {
    oracle::Rng rng(6);
    const std::size_t n = 24, d = 3;
    const Matrix Q = rng.mat(n, d), K = rng.mat(n, d), V = rng.mat(n, d);
    Matrix H(n, n);
    const Matrix S = oracle::scores(Q, K, 1.0 / d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            H(i, j) = std::exp(S(i, j));
    const auto exact = best_rank_k_factors(H, n);
    CHECK(exact.achieved < 1e-10);
    const auto mask = MaskSpec::causal(n);
    CHECK(max_abs_diff(masked_lowrank_attention(exact.factors, mask, V),
                       oracle::per_entry_softmax(S, oracle::causal_bits(n), V)) < 1e-8);

    const Matrix ones = Matrix::constant(n, 1, 1.0);
    const Matrix normalized = masked_lowrank_attention(exact.factors, mask, ones);
    for (double y : normalized.data())
        CHECK(std::abs(y - 1.0) < 1e-10);

    for (std::size_t k = 1; k <= 4; ++k) {
        const auto fit = best_rank_k_factors(H, k);
        if (fit.achieved > 0.1)
            continue;
        const Matrix Yt = masked_lowrank_attention(fit.factors, mask, V);
        CHECK(max_abs_diff(Yt, oracle::per_entry_softmax(S, oracle::causal_bits(n), V)) <=
              4.0 * fit.achieved * linf_norm(V));
    }

    Matrix bits = oracle::causal_bits(n);
    bits(3, 0) = bits(3, 1) = bits(3, 2) = bits(3, 3) = 0.0;
    CHECK_THROWS_AS(masked_lowrank_attention(exact.factors, MaskSpec::dense(bits), V), NormalizationError);
}

TEST_CASE("rank-k fixture factors") {
    oracle::Rng rng(7);
    const std::size_t n = 16;
    const Vector a = rng.vec(n, 0.5, 2.0), b = rng.vec(n, 0.5, 2.0);
    Matrix rank1(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            rank1(i, j) = a[i] * b[j];
    CHECK(best_rank_k_factors(rank1, 1).achieved < 1e-12);

    const Matrix Q = rng.mat(n, 2), K = rng.mat(n, 2);
    const Matrix S = oracle::scores(Q, K);
    Matrix H(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            H(i, j) = std::exp(S(i, j));
    double prev = INFINITY;
    for (std::size_t k = 1; k <= n; ++k) {
        const double eps = best_rank_k_factors(H, k).achieved;
        CHECK(eps <= prev + 1e-12);
        prev = eps;
    }
    CHECK(prev < 1e-10);

    try {
        epsk_fixture_factors(H, 1, 1e-9);
        FAIL("expected a fixture error");
    } catch (const FixtureError &e) {
        CHECK(e.achieved() > 1e-9);
    }
    CHECK_THROWS_AS(best_rank_k_factors(Matrix(3, 3), 1), InvalidArgument);
}

TEST_CASE("property: normalized attention under relative perturbation") {
    oracle::Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = rng.index(1, 10);
        const double eps = rng.uniform(0.0, 0.1);
        Matrix A(n, n), At(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                A(i, j) = rng.uniform(0.01, 5.0);
                At(i, j) = A(i, j) * (1.0 + rng.uniform(-eps, eps));
            }
        const Matrix V = rng.mat(n, 2);
        CHECK(max_abs_diff(normalized_apply(A, V), normalized_apply(At, V)) <= 4.0 * eps * linf_norm(V) + 1e-14);
    }
}

TEST_CASE("property: |a - b| <= 2 eps min(a, b)") {
    oracle::Rng rng(9);
    for (int trial = 0; trial < 1000; ++trial) {
        const double eps = rng.uniform(1e-6, 0.1);
        const double a = rng.uniform(0.0, 10.0);
        const double b = a + rng.uniform(-eps, eps) * a;
        CHECK(std::abs(a - b) <= 2.0 * eps * std::min(a, b) + 1e-15);
    }
}
