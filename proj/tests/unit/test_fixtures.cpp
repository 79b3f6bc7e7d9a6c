#include <cmath>
#include <numbers>

#include "convbasis/conv.hpp"
#include "convbasis/error.hpp"
#include "convbasis/fixtures.hpp"
#include "convbasis/mask.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace convbasis;

namespace {

bool is_toeplitz(const Matrix &S, double tol) {
    for (std::size_t i = 1; i < S.rows(); ++i)
        for (std::size_t j = 1; j < S.cols(); ++j)
            if (std::abs(S(i, j) - S(i - 1, j - 1)) > tol)
                return false;
    return true;
}

Matrix masked(const Matrix &S) {
    Matrix out(S.rows(), S.cols());
    for (std::size_t i = 0; i < S.rows(); ++i)
        for (std::size_t j = 0; j <= i; ++j)
            out(i, j) = S(i, j);
    return out;
}

} // namespace

TEST_CASE("planar construction with d = 2") {
    const double theta = 0.37;
    UnitConstructionParams p{{theta}, {1.0}, {0, 1}, Matrix::identity(2)};
    const Matrix Z = general_unit_construction(6, 2, p);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(Z(i, 0) == doctest::Approx(std::cos(theta * static_cast<double>(i))));
        for (std::size_t j = 0; j < 6; ++j) {
            const double dot = Z(i, 0) * Z(j, 0) + Z(i, 1) * Z(j, 1);
            CHECK(dot == doctest::Approx(std::cos(theta * (static_cast<double>(i) - static_cast<double>(j)))));
        }
    }
    p.theta = {0.0};
    const Matrix flat = general_unit_construction(4, 2, p);
    const Matrix S = oracle::dense_product(flat, oracle::transpose(flat));
    for (double s : S.data())
        CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("random constructions are Toeplitz with unit rows") {
    for (std::size_t d = 1; d <= 7; ++d)
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto params = random_unit_params(d, seed);
            const Matrix Z = general_unit_construction(16, d, params);
            const Matrix S = oracle::dense_product(Z, oracle::transpose(Z));
            CHECK(is_toeplitz(S, 1e-12));
            for (std::size_t i = 0; i < 16; ++i)
                CHECK(S(i, i) == doctest::Approx(1.0).epsilon(1e-12));
        }
}

TEST_CASE("construction validation") {
    auto p = random_unit_params(4, 1);
    auto bad = p;
    bad.amplitude[0] *= 2.0;
    CHECK_THROWS_AS(general_unit_construction(8, 4, bad), InvalidArgument);
    bad = p;
    bad.permutation[0] = bad.permutation[1];
    CHECK_THROWS_AS(general_unit_construction(8, 4, bad), InvalidArgument);
    bad = p;
    bad.rotation(0, 0) += 0.5;
    CHECK_THROWS_AS(general_unit_construction(8, 4, bad), InvalidArgument);
    CHECK_THROWS_AS(general_unit_construction(8, 5, p), InvalidArgument);
}

TEST_CASE("Toeplitz pair masks to a single conv") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto qk = toeplitz_qk(12, 3, random_unit_params(3, seed));
        const Matrix S = oracle::dense_product(qk.Q, oracle::transpose(qk.K));
        Vector first(12);
        for (std::size_t i = 0; i < 12; ++i)
            first[i] = S(i, 0);
        const ConvBasis single(12, {{first, 12}});
        CHECK(max_abs_diff(basis_to_dense(single), masked(S)) < 1e-12);
    }
}

TEST_CASE("circulant pair") {
    const auto qk = circulant_qk(4, 2);
    const Matrix S = oracle::dense_product(qk.Q, oracle::transpose(qk.K));
    const double expected[4] = {1.0, 0.0, -1.0, 0.0};
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(S(i, 0) == doctest::Approx(expected[i]).epsilon(1e-12).scale(1.0));
    for (std::size_t n : {5u, 8u, 13u}) {
        const auto c = circulant_qk(n, 3);
        const Matrix C = oracle::dense_product(c.Q, oracle::transpose(c.K));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                CHECK(std::abs(C(i, j) - C((i + 1) % n, (j + 1) % n)) < 1e-12);
    }
}

TEST_CASE("separated instances satisfy the margin") {
    for (std::size_t T : {1u, 2u, 4u})
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const std::size_t n = 32, k = 4;
            const double delta = 0.5;
            const auto inst = separated_conv_instance(n, k, T, delta, seed);
            CHECK(inst.basis.k() == k);
            CHECK(inst.basis.terms()[0].m == n);
            for (std::size_t m : inst.basis.windows())
                CHECK(m >= T);
            CHECK(nondegeneracy_margin(inst.basis, T) >= 1.01 * delta - 1e-12);
            CHECK(max_abs_diff(oracle::dense_product(inst.Q, oracle::transpose(inst.K)),
                               basis_to_dense(inst.basis)) < 1e-14);
        }
    SeparatedOptions nonneg;
    nonneg.nonnegative_tail = true;
    const auto inst = separated_conv_instance(16, 3, 1, 1.0, 3, nonneg);
    for (const auto &t : inst.basis.terms())
        for (std::size_t p = 0; p < t.m; ++p)
            CHECK(t.b[p] >= 0.0);
    CHECK(separated_conv_instance(16, 3, 2, 1.0, 4).Q == separated_conv_instance(16, 3, 2, 1.0, 4).Q);
    CHECK_THROWS_AS(separated_conv_instance(8, 9, 1, 1.0, 0), InvalidArgument);
    CHECK_THROWS_AS(separated_conv_instance(8, 6, 4, 1.0, 0), InvalidArgument);
}

TEST_CASE("margin of a known basis") {
    Vector b1(4, 0.0), b2(4, 0.0);
    b1[0] = 2.0;
    b1[1] = 1.0;
    b2[0] = -1.5;
    b2[1] = 3.0;
    const ConvBasis h(4, {{b1, 4}, {b2, 2}});
    CHECK(nondegeneracy_margin(h, 1) == doctest::Approx(0.5));
    CHECK(nondegeneracy_margin(h, 2) == doctest::Approx(3.0));
    CHECK(std::isinf(nondegeneracy_margin(ConvBasis(4, {}), 1)));
}

TEST_CASE("noise matrix") {
    const Matrix R = noise_matrix(10, 0.25, 7);
    CHECK(linf_norm(R) == 0.25);
    CHECK(noise_matrix(10, 0.25, 7) == R);
    CHECK(linf_norm(noise_matrix(5, 0.0, 1)) == 0.0);
}

TEST_CASE("psd weight factor") {
    oracle::Rng rng(11);
    const Matrix B = rng.mat(4, 3);
    const Matrix P = oracle::dense_product(B, oracle::transpose(B));
    const Matrix A = psd_weight_factor(P, Matrix::identity(4));
    CHECK(max_abs_diff(oracle::dense_product(A, oracle::transpose(A)), P) < 1e-10);
    const Matrix N{{1.0, 0.0}, {0.0, -1.0}};
    CHECK_THROWS_AS(psd_weight_factor(N, Matrix::identity(2)), InvalidArgument);
    const Matrix asym{{1.0, 0.5}, {0.0, 1.0}};
    CHECK_THROWS_AS(psd_weight_factor(asym, Matrix::identity(2)), InvalidArgument);
}

TEST_CASE("conv training fixture") {
    for (std::size_t k = 1; k <= 4; ++k) {
        const auto fx = conv_training_instance(24, k, k);
        CHECK(fx.instance.d() == k + 1);
        CHECK(fx.scores.k() == k);
        const Matrix S = oracle::dense_product(oracle::dense_product(fx.instance.A1, fx.instance.X),
                                               oracle::transpose(fx.instance.A2));
        CHECK(max_abs_diff(basis_to_dense(fx.scores), masked(S)) < 1e-10);
        Matrix U(24, 24);
        for (std::size_t i = 0; i < 24; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                U(i, j) = std::exp(S(i, j));
        CHECK(max_abs_diff(basis_to_dense(fx.u), U) < 1e-10);
        CHECK(fx.params.epsilon == 0.0);
        CHECK_NOTHROW(fx.params.validate(24));
    }
}

TEST_CASE("seeded random helpers") {
    CHECK(random_matrix(3, 4, 9) == random_matrix(3, 4, 9));
    CHECK(random_vector(5, 1, 2.0, 3.0) == random_vector(5, 1, 2.0, 3.0));
    for (double v : random_vector(100, 2, 2.0, 3.0)) {
        CHECK(v >= 2.0);
        CHECK(v <= 3.0);
    }
}
