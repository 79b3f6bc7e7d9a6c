#include "convbasis/fixtures.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "convbasis/error.hpp"

namespace convbasis {

namespace {

Eigen::MatrixXd to_eigen(const Matrix &m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
    return out;
}

Matrix from_eigen(const Eigen::MatrixXd &m) {
    Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
    return out;
}

} // namespace

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo,
                     double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            m(i, j) = dist(rng);
    return m;
}

Vector random_vector(std::size_t n, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    Vector v(n);
    for (double &x : v)
        x = dist(rng);
    return v;
}

Matrix general_unit_construction(std::size_t n, std::size_t d,
                                 const UnitConstructionParams &params) {
    if (n == 0 || d == 0)
        throw InvalidArgument("unit construction: n and d must be positive");
    const std::size_t l = (d + 1) / 2;
    const bool odd = d % 2 == 1;
    const std::size_t planes = odd ? l - 1 : l;
    if (params.amplitude.size() != l)
        throw InvalidArgument("unit construction: expected " + std::to_string(l) +
                              " amplitudes");
    if (params.theta.size() != planes)
        throw InvalidArgument("unit construction: expected " + std::to_string(planes) +
                              " angles");
    double norm2 = 0.0;
    for (double a : params.amplitude)
        norm2 += a * a;
    if (std::abs(norm2 - 1.0) > 1e-12)
        throw InvalidArgument("unit construction: amplitudes must satisfy sum a^2 = 1");
    std::vector<std::size_t> sorted = params.permutation;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t c = 0; c < d; ++c)
        if (sorted.size() != d || sorted[c] != c)
            throw InvalidArgument("unit construction: invalid permutation");
    const Matrix &H = params.rotation;
    if (H.rows() != d || H.cols() != d)
        throw InvalidArgument("unit construction: rotation must be d x d");
    if (max_abs_diff(matmul(H.transposed(), H), Matrix::identity(d)) > 1e-10)
        throw InvalidArgument("unit construction: rotation is not orthonormal");

    Matrix Z(n, d);
    Vector u(d);
    for (std::size_t i = 0; i < n; ++i) {
        const double pos = static_cast<double>(i);
        for (std::size_t c = 0; c < planes; ++c) {
            u[params.permutation[c]] = params.amplitude[c] * std::cos(pos * params.theta[c]);
            u[params.permutation[c + l]] = params.amplitude[c] * std::sin(pos * params.theta[c]);
        }
        if (odd)
            u[params.permutation[l - 1]] = params.amplitude[l - 1];
        const Vector z = matvec(H, u);
        std::copy(z.begin(), z.end(), Z.row(i).begin());
    }
    return Z;
}

UnitConstructionParams random_unit_params(std::size_t d, std::uint64_t seed) {
    if (d == 0)
        throw InvalidArgument("random_unit_params: d must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t l = (d + 1) / 2;
    const std::size_t planes = d % 2 == 1 ? l - 1 : l;

    UnitConstructionParams p;
    for (std::size_t c = 0; c < planes; ++c)
        p.theta.push_back(unit(rng) * std::numbers::pi);
    double norm2 = 0.0;
    for (std::size_t c = 0; c < l; ++c) {
        p.amplitude.push_back(0.2 + unit(rng));
        norm2 += p.amplitude.back() * p.amplitude.back();
    }
    for (double &a : p.amplitude)
        a /= std::sqrt(norm2);
    p.permutation.resize(d);
    std::iota(p.permutation.begin(), p.permutation.end(), std::size_t{0});
    std::shuffle(p.permutation.begin(), p.permutation.end(), rng);

    Eigen::MatrixXd g(d, d);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            g(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    p.rotation = from_eigen(qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols()));
    return p;
}

QKPair toeplitz_qk(std::size_t n, std::size_t d, const UnitConstructionParams &params) {
    Matrix Z = general_unit_construction(n, d, params);
    const Matrix G = matmul(Z, Z.transposed());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double ref = i >= j ? G(i - j, 0) : G(0, j - i);
            if (std::abs(G(i, j) - ref) > 1e-10)
                throw FixtureError("unit construction did not produce a Toeplitz Gram matrix",
                                   std::abs(G(i, j) - ref));
        }
    return {Z, Z};
}

QKPair circulant_qk(std::size_t n, std::size_t d) {
    if (n < 2)
        throw InvalidArgument("circulant_qk: n must be at least 2");
    if (d < 2)
        throw InvalidArgument("circulant_qk: d must be at least 2");
    UnitConstructionParams p;
    const std::size_t l = (d + 1) / 2;
    const std::size_t planes = d % 2 == 1 ? l - 1 : l;
    p.theta.assign(planes, 2.0 * std::numbers::pi / static_cast<double>(n));
    p.amplitude.assign(l, 0.0);
    p.amplitude[0] = 1.0;
    p.permutation.resize(d);
    std::iota(p.permutation.begin(), p.permutation.end(), std::size_t{0});
    p.rotation = Matrix::identity(d);
    Matrix Z = general_unit_construction(n, d, p);
    const Matrix G = matmul(Z, Z.transposed());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double dev = std::abs(G(i, j) - G((i + n - j) % n, 0));
            if (dev > 1e-10)
                throw FixtureError("circulant construction failed the wraparound check", dev);
        }
    return {Z, Z};
}

double nondegeneracy_margin(const ConvBasis &h, std::size_t T) {
    if (T < 1 || T > h.n())
        throw InvalidArgument("nondegeneracy_margin: T out of range");
    double margin = std::numeric_limits<double>::infinity();
    Vector sum(T);
    for (std::size_t j = 0; j < h.k(); ++j) {
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t i = j; i < h.k(); ++i) {
            for (std::size_t p = 0; p < T; ++p)
                sum[p] += h.terms()[i].b[p];
            margin = std::min(margin, l1_vec(sum));
        }
    }
    return margin;
}

SeparatedInstance separated_conv_instance(std::size_t n, std::size_t k, std::size_t T,
                                          double delta, std::uint64_t seed,
                                          const SeparatedOptions &options) {
    if (n == 0 || T < 1 || T > n)
        throw InvalidArgument("separated_conv_instance: T must lie in [1, n]");
    if (k < 1 || k > n - T + 1)
        throw InvalidArgument("separated_conv_instance: k must lie in [1, n - T + 1]");
    if (!(delta > 0.0))
        throw InvalidArgument("separated_conv_instance: delta must be positive");
    std::mt19937_64 rng(seed);
    const double target = 1.01 * delta;
    std::uniform_real_distribution<double> tail(options.nonnegative_tail ? 0.0 : -1.0, 1.0);

    for (std::size_t attempt = 0; attempt < options.max_attempts; ++attempt) {
        // Windows: n plus k-1 distinct values from [T, n-1].
        std::vector<std::size_t> pool(n - T);
        std::iota(pool.begin(), pool.end(), T);
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<std::size_t> windows(pool.begin(), pool.begin() + static_cast<long>(k - 1));
        std::sort(windows.begin(), windows.end(), std::greater<>());
        windows.insert(windows.begin(), n);

        // Positive T-prefixes keep every consecutive sum away from zero.
        std::uniform_real_distribution<double> head(target / static_cast<double>(T),
                                                    2.0 * target / static_cast<double>(T));
        std::vector<SubConvTerm> terms;
        for (std::size_t r = 0; r < k; ++r) {
            SubConvTerm t{Vector(n, 0.0), windows[r]};
            for (std::size_t p = 0; p < t.m; ++p)
                t.b[p] = p < T ? head(rng) : options.tail_scale * tail(rng);
            terms.push_back(std::move(t));
        }
        ConvBasis basis(n, std::move(terms));
        if (nondegeneracy_margin(basis, T) < target)
            continue;
        return {basis, basis_to_dense(basis), Matrix::identity(n)};
    }
    throw FixtureError("separated_conv_instance: sampling budget exhausted");
}

Matrix noise_matrix(std::size_t n, double epsilon, std::uint64_t seed) {
    if (!(epsilon >= 0.0))
        throw InvalidArgument("noise_matrix: epsilon must be nonnegative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-epsilon, epsilon);
    Matrix R(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            R(i, j) = dist(rng);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t i = pick(rng);
    R(i, std::uniform_int_distribution<std::size_t>(0, i)(rng)) =
        rng() % 2 == 0 ? epsilon : -epsilon;
    return R;
}

ConvTrainingFixture conv_training_instance(std::size_t n, std::size_t k,
                                           std::uint64_t seed) {
    if (k < 1 || k + 1 > n)
        throw InvalidArgument("conv_training_instance: k must lie in [1, n - 1]");
    const std::size_t d = k + 1;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double amp = 0.6 + 0.4 * unit(rng);
    const double theta = 0.2 + 0.8 * unit(rng);
    std::vector<std::size_t> onsets(n - 1);
    std::iota(onsets.begin(), onsets.end(), std::size_t{1});
    std::shuffle(onsets.begin(), onsets.end(), rng);
    onsets.resize(k - 1);
    std::sort(onsets.begin(), onsets.end());

    // Z1 rows: planar unit construction; Z2 masks the constant columns.
    Matrix Z1(n, d), Z2(n, d);
    std::vector<double> level(k - 1);
    for (double &c : level)
        c = 0.5 + 0.5 * unit(rng);
    for (std::size_t i = 0; i < n; ++i) {
        const double pos = static_cast<double>(i);
        Z1(i, 0) = Z2(i, 0) = amp * std::cos(pos * theta);
        Z1(i, 1) = Z2(i, 1) = amp * std::sin(pos * theta);
        for (std::size_t r = 0; r + 1 < k; ++r) {
            Z1(i, 2 + r) = level[r];
            Z2(i, 2 + r) = i >= onsets[r] ? level[r] : 0.0;
        }
    }

    ConvTrainingFixture fx;
    std::vector<SubConvTerm> terms;
    SubConvTerm first{Vector(n, 0.0), n};
    for (std::size_t p = 0; p < n; ++p)
        first.b[p] = amp * amp * std::cos(static_cast<double>(p) * theta);
    terms.push_back(std::move(first));
    for (std::size_t r = 0; r + 1 < k; ++r)
        terms.push_back({Vector(n, level[r] * level[r]), n - onsets[r]});
    for (auto &t : terms)
        std::fill(t.b.begin() + static_cast<long>(t.m), t.b.end(), 0.0);
    fx.scores = ConvBasis(n, std::move(terms));
    fx.u = masked_exp_basis(fx.scores);

    const auto rot = random_unit_params(d, rng());
    auto &inst = fx.instance;
    inst.X = rot.rotation;
    inst.A1 = matmul(Z1, rot.rotation.transposed());
    inst.A2 = Z2;
    inst.A3 = random_matrix(n, d, rng());
    inst.Y = random_matrix(d, d, rng());
    inst.E = random_matrix(n, d, rng());

    fx.params = NonDegenSpec{k, 1, nondegeneracy_margin(fx.u, 1) / 1.01, 0.0};
    return fx;
}

Matrix psd_weight_factor(const Matrix &Wq, const Matrix &Wk) {
    if (Wq.rows() != Wk.rows() || Wq.cols() != Wk.cols())
        throw InvalidArgument("psd_weight_factor: Wq and Wk must have equal shape");
    const Matrix P = matmul(Wq, Wk.transposed());
    const std::size_t d = P.rows();
    const double scale = std::max(1.0, linf_norm(P));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (std::abs(P(i, j) - P(j, i)) > 1e-10 * scale)
                throw InvalidArgument("psd_weight_factor: Wq Wk^T is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_eigen(P));
    Eigen::VectorXd lambda = eig.eigenvalues();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda(i) < -1e-10 * scale)
            throw InvalidArgument("psd_weight_factor: Wq Wk^T is not positive semidefinite");
        lambda(i) = std::sqrt(std::max(lambda(i), 0.0));
    }
    const Eigen::MatrixXd A = eig.eigenvectors() * lambda.asDiagonal();
    return from_eigen(A);
}

} // namespace convbasis
