#include "convbasis/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "convbasis/attention.hpp"
#include "convbasis/conv.hpp"
#include "convbasis/conv_attention.hpp"
#include "convbasis/error.hpp"
#include "convbasis/fft.hpp"
#include "convbasis/fixtures.hpp"
#include "convbasis/gradient.hpp"
#include "convbasis/lowrank.hpp"
#include "convbasis/recovery.hpp"
#include "json.hpp"

namespace convbasis {

void BenchConfig::validate() const {
    if (sizes.empty())
        throw InvalidArgument("at least one size is required");
    for (std::size_t n : sizes)
        if (n < 2)
            throw InvalidArgument("sizes must be at least 2");
    if (reps < 1)
        throw InvalidArgument("reps must be at least 1");
    if (format != "csv" && format != "json")
        throw InvalidArgument("format must be csv or json");
}

namespace {

template <class F>
double median_time_ns(std::size_t reps, F &&body) {
    body();
    std::vector<double> times;
    times.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(
            std::max(1.0, std::chrono::duration<double, std::nano>(t1 - t0).count()));
    }
    std::nth_element(times.begin(), times.begin() + static_cast<long>(times.size() / 2),
                     times.end());
    return times[times.size() / 2];
}

} // namespace

std::vector<BenchRecord> bench_conv_matvec(const BenchConfig &cfg) {
    cfg.validate();
    std::vector<BenchRecord> out;
    for (std::size_t idx = 0; idx < cfg.sizes.size(); ++idx) {
        const std::size_t n = cfg.sizes[idx];
        const Vector a = random_vector(n, cfg.seed + 2 * idx);
        const Vector x = random_vector(n, cfg.seed + 2 * idx + 1);
        Vector y_naive, y_fft;
        const double t_naive =
            median_time_ns(cfg.reps, [&] { y_naive = conv_matvec_naive(a, x); });
        const double t_fft = median_time_ns(cfg.reps, [&] { y_fft = conv_matvec(a, x); });
        const double err = relative_linf_diff(y_fft, y_naive);
        if (err > 1e-9)
            throw ConsistencyError("FFT and naive conv matvec disagree at n = " +
                                   std::to_string(n));
        const double len = static_cast<double>(next_power_of_two(2 * n));
        out.push_back({n, 1, 1, "naive", t_naive, 2.0 * static_cast<double>(n) * n, err, 0.0});
        out.push_back({n, 1, 1, "fft", t_fft, 3.0 * fft_flops(static_cast<std::size_t>(len)) + 6.0 * len,
                       err, 0.0});
    }
    return out;
}

double loglog_slope(const std::vector<BenchRecord> &records, const std::string &method) {
    std::vector<double> xs, ys;
    for (const auto &r : records)
        if (r.method == method) {
            xs.push_back(std::log(static_cast<double>(r.n)));
            ys.push_back(std::log(r.time_ns));
        }
    if (xs.size() < 2)
        throw InvalidArgument("slope needs at least two sizes for method " + method);
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0)
        throw InvalidArgument("slope needs at least two distinct sizes");
    return sxy / sxx;
}

std::vector<BenchRecord> sweep_error_vs_k(const BenchConfig &cfg,
                                          std::vector<std::size_t> counts) {
    cfg.validate();
    const std::size_t n = cfg.sizes.front();
    SeparatedOptions opts;
    opts.nonnegative_tail = true;
    const auto inst = separated_conv_instance(n, cfg.k, cfg.T, cfg.delta, cfg.seed, opts);
    const Matrix V = random_matrix(n, cfg.d, cfg.seed + 1);
    const AttentionInput input{inst.Q, inst.K, V};
    const Matrix exact = naive_masked_attention(input, MaskSpec::causal(n));
    const auto rec = recover(inst.Q, inst.K, MaskSpec::causal(n),
                             NonDegenSpec{cfg.k, cfg.T, cfg.delta, 0.0});
    if (counts.empty()) {
        counts.resize(cfg.k);
        std::iota(counts.begin(), counts.end(), std::size_t{1});
    }
    std::vector<BenchRecord> out;
    for (std::size_t c : counts) {
        if (c < 1 || c > rec.raw.k())
            throw InvalidArgument("sweep count " + std::to_string(c) + " outside [1, " +
                                  std::to_string(rec.raw.k()) + "]");
        Matrix approx;
        const auto basis = masked_exp_basis(rec.raw.truncated(c));
        const double t = median_time_ns(cfg.reps, [&] { approx = apply_conv_attention(basis, V); });
        out.push_back({n, cfg.d, c, "conv-truncated", t,
                       static_cast<double>(basis.k() * (cfg.d + 1)) *
                           (3.0 * fft_flops(next_power_of_two(2 * n))),
                       max_abs_diff(approx, exact), relative_frobenius_diff(exact, approx)});
    }
    return out;
}

namespace {

const char *kCsvHeader = "n,d,k,method,time_ns,flops,max_error,rel_frobenius";

void append_double(std::string &s, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    s.append(buf, res.ptr);
}

template <class T>
T parse_field(const std::string &field, std::size_t line) {
    T v{};
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw FormatError("record line " + std::to_string(line) + ": bad field '" + field + "'");
    return v;
}

} // namespace

std::string records_to_csv(const std::vector<BenchRecord> &records) {
    std::string s = kCsvHeader;
    s += '\n';
    for (const auto &r : records) {
        s += std::to_string(r.n) + ',' + std::to_string(r.d) + ',' + std::to_string(r.k) +
             ',' + r.method + ',';
        append_double(s, r.time_ns);
        s += ',';
        append_double(s, r.flops);
        s += ',';
        append_double(s, r.max_error);
        s += ',';
        append_double(s, r.rel_frobenius);
        s += '\n';
    }
    return s;
}

std::vector<BenchRecord> records_from_csv(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw FormatError("record CSV: missing header");
    std::vector<BenchRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ','))
            f.push_back(field);
        if (f.size() != 8)
            throw FormatError("record line " + std::to_string(lineno) + ": expected 8 fields");
        out.push_back({parse_field<std::size_t>(f[0], lineno),
                       parse_field<std::size_t>(f[1], lineno),
                       parse_field<std::size_t>(f[2], lineno), f[3],
                       parse_field<double>(f[4], lineno), parse_field<double>(f[5], lineno),
                       parse_field<double>(f[6], lineno), parse_field<double>(f[7], lineno)});
    }
    return out;
}

std::string records_to_json(const std::vector<BenchRecord> &records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &r : records)
        arr.push_back({{"n", r.n},
                       {"d", r.d},
                       {"k", r.k},
                       {"method", r.method},
                       {"time_ns", r.time_ns},
                       {"flops", r.flops},
                       {"max_error", r.max_error},
                       {"rel_frobenius", r.rel_frobenius}});
    return arr.dump(2);
}

std::vector<BenchRecord> records_from_json(const std::string &text) {
    std::vector<BenchRecord> out;
    try {
        const auto arr = nlohmann::json::parse(text);
        for (const auto &j : arr)
            out.push_back({j.at("n").get<std::size_t>(), j.at("d").get<std::size_t>(),
                           j.at("k").get<std::size_t>(), j.at("method").get<std::string>(),
                           j.at("time_ns").get<double>(), j.at("flops").get<double>(),
                           j.at("max_error").get<double>(),
                           j.at("rel_frobenius").get<double>()});
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(std::string("record JSON: ") + e.what());
    }
    return out;
}

bool VerificationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const VerificationCheck &c) { return c.passed; });
}

std::string VerificationReport::to_json() const {
    nlohmann::json j;
    j["passed"] = passed();
    j["checks"] = nlohmann::json::array();
    for (const auto &c : checks)
        j["checks"].push_back({{"name", c.name},
                               {"measured", c.measured},
                               {"bound", c.bound},
                               {"passed", c.passed}});
    return j.dump(2);
}

namespace {

class Suite {
  public:
    explicit Suite(VerificationReport &report) : report_(report) {}

    /// Runs body, which returns the measured value; passes when <= bound.
    void check(const std::string &name, double bound, const std::function<double()> &body) {
        VerificationCheck c{name, 0.0, bound, false};
        try {
            c.measured = body();
            c.passed = std::isfinite(c.measured) && c.measured <= bound;
        } catch (const std::exception &) {
            c.measured = std::numeric_limits<double>::quiet_NaN();
        }
        report_.checks.push_back(c);
    }

  private:
    VerificationReport &report_;
};

Matrix dense_lowrank(const LowRankFactors &f, const MaskSpec &mask) {
    return hadamard(mask.materialize(), matmul(f.U1, f.U2.transposed()));
}

double fd_gradient_error(const TrainingInstance &inst, const Matrix &grad) {
    Matrix fd(inst.d(), inst.d());
    for (std::size_t a = 0; a < inst.d(); ++a)
        for (std::size_t b = 0; b < inst.d(); ++b) {
            const double step = 1e-5 * std::max(1.0, std::abs(inst.X(a, b)));
            TrainingInstance plus = inst, minus = inst;
            plus.X(a, b) += step;
            minus.X(a, b) -= step;
            fd(a, b) = (loss(plus) - loss(minus)) / (2.0 * step);
        }
    return relative_linf_diff(grad, fd);
}

} // namespace

VerificationReport run_verification_suite(const BenchConfig &cfg,
                                          const VerificationOptions &options) {
    VerificationReport report;
    Suite suite(report);
    const std::uint64_t seed = cfg.seed;

    suite.check("fft-roundtrip", 1e-12, [&] {
        const Vector re = random_vector(64, seed);
        ComplexVector x(re.begin(), re.end());
        const auto back = fft(fft(x), true);
        double err = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            err = std::max(err, std::abs(back[i] - x[i]));
        return err / linf_vec(re);
    });
    suite.check("conv-matvec-vs-naive", 1e-9, [&] {
        double worst = 0.0;
        for (std::size_t n : {2u, 7u, 64u, 333u, 1000u}) {
            const Vector a = random_vector(n, seed + n), x = random_vector(n, seed + 2 * n);
            worst = std::max(worst, relative_linf_diff(conv_matvec(a, x), conv_matvec_naive(a, x)));
        }
        return worst;
    });
    suite.check("basis-matvec-vs-dense", 1e-10, [&] {
        const auto inst = separated_conv_instance(64, 3, 1, 1.0, seed);
        const Vector x = random_vector(64, seed + 5);
        return relative_linf_diff(basis_matvec(inst.basis, x),
                                  matvec(basis_to_dense(inst.basis), x));
    });
    suite.check("toeplitz-circulant-vs-dense", 1e-10, [&] {
        const std::size_t n = 128;
        const Vector t = random_vector(2 * n - 1, seed + 11), c = random_vector(n, seed + 12);
        const Vector x = random_vector(n, seed + 13);
        Matrix Tm(n, n), Cm(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                Tm(i, j) = t[i + n - 1 - j];
                Cm(i, j) = c[(i + n - j) % n];
            }
        return std::max(relative_linf_diff(toeplitz_matvec(t, x), matvec(Tm, x)),
                        relative_linf_diff(circulant_matvec(c, x), matvec(Cm, x)));
    });
    suite.check("decompose-roundtrip", 1e-12, [&] {
        Matrix h = random_matrix(16, 16, seed + 20);
        for (std::size_t i = 0; i < 16; ++i)
            for (std::size_t j = i + 1; j < 16; ++j)
                h(i, j) = 0.0;
        return max_abs_diff(basis_to_dense(decompose_lower_triangular(h)), h);
    });
    suite.check("recovery-exact-windows", 0.0, [&] {
        double mismatches = 0.0;
        for (std::uint64_t s = 0; s < 10; ++s) {
            const auto inst = separated_conv_instance(64, 4, 2, 1.0, seed + 100 + s);
            const auto rec = recover(inst.Q, inst.K, MaskSpec::causal(64),
                                     NonDegenSpec{4, 2, 1.0, 0.0});
            if (rec.windows() != inst.basis.windows() ||
                max_abs_diff(basis_to_dense(rec.raw), basis_to_dense(inst.basis)) > 1e-10 ||
                rec.column_queries > query_budget(64, 4))
                mismatches += 1.0;
        }
        return mismatches;
    });
    suite.check("recovery-noise-error-bound", 1.0, [&] {
        double worst = 0.0;
        for (std::uint64_t s = 0; s < 10; ++s) {
            const double eps = 0.01;
            const auto inst = separated_conv_instance(48, 3, 1, 1.0, seed + 200 + s);
            const Matrix Qn = inst.Q + noise_matrix(48, eps, seed + 300 + s);
            const Matrix V = random_matrix(48, 3, seed + 400 + s);
            const NonDegenSpec params{3, 1, 1.0, eps};
            RecoveryResult rec;
            const Matrix approx = conv_forward({Qn, inst.K, V}, params, rec);
            if (rec.windows() != inst.basis.windows())
                return 2.0;
            const Matrix exact = naive_masked_attention({Qn, inst.K, V}, MaskSpec::causal(48));
            worst = std::max(worst, max_abs_diff(exact, approx) / conv_error_bound(eps, V));
        }
        return worst;
    });
    suite.check("exact-forward-vs-naive", 1e-8, [&] {
        double worst = 0.0;
        for (std::uint64_t s = 0; s < 5; ++s) {
            const std::size_t n = 8 + 11 * s, d = 1 + s % 4;
            const AttentionInput in{random_matrix(n, d, seed + 500 + s),
                                    random_matrix(n, d, seed + 600 + s),
                                    random_matrix(n, d, seed + 700 + s)};
            worst = std::max(worst, max_abs_diff(exact_forward_via_conv(in),
                                                 naive_masked_attention(in, MaskSpec::causal(n))));
        }
        return worst;
    });
    suite.check("full-self-attention-vs-dense", 1e-8, [&] {
        const std::size_t n = 32;
        const auto qk = toeplitz_qk(n, 3, random_unit_params(3, seed + 800));
        const Matrix V = random_matrix(n, 2, seed + 801);
        const NonDegenSpec p{1, 1, 1e-3, 0.0};
        const Matrix all = Matrix::constant(n, n, 1.0);
        return max_abs_diff(full_self_attention_forward({qk.Q, qk.K, V}, p, p),
                            naive_masked_attention({qk.Q, qk.K, V}, MaskSpec::dense(all)));
    });
    const auto gfx = conv_training_instance(16, 3, seed + 900);
    suite.check("naive-gradient-vs-finite-differences", 1e-4, [&] {
        return fd_gradient_error(gfx.instance, naive_gradient(gfx.instance));
    });
    suite.check("fast-gradient-vs-naive", 1e-6, [&] {
        FastGradientOptions o;
        o.p2_sign = options.p2_sign;
        return relative_linf_diff(fast_gradient(gfx.instance, gfx.params, o),
                                  naive_gradient(gfx.instance));
    });
    suite.check("fast-gradient-vs-finite-differences", 1e-4, [&] {
        FastGradientOptions o;
        o.p2_sign = options.p2_sign;
        return fd_gradient_error(gfx.instance, fast_gradient(gfx.instance, gfx.params, o));
    });
    suite.check("zero-residual-gradient", 1e-10, [&] {
        TrainingInstance inst = gfx.instance;
        const auto parts = dense_gradient_parts(inst);
        inst.E = matmul(parts.f, parts.h);
        return linf_norm(naive_gradient(inst));
    });
    suite.check("kron-vect", 0.0, [&] {
        const auto rep = kron_vect_check(random_matrix(3, 2, seed + 950), random_matrix(2, 2, seed + 951),
                                         random_matrix(3, 2, seed + 952));
        return rep.passed ? 0.0 : 1.0;
    });
    suite.check("lowrank-matvecs-vs-dense", 1e-10, [&] {
        const std::size_t n = 32;
        const LowRankFactors f{random_matrix(n, 4, seed + 1000), random_matrix(n, 4, seed + 1001)};
        const Vector v = random_vector(n, seed + 1002);
        std::vector<std::size_t> start(n), end(n), group(n);
        for (std::size_t i = 0; i < n; ++i) {
            start[i] = i / 2;
            end[i] = std::min(n - 1, i + 3);
            group[i] = i % 3;
        }
        std::vector<std::vector<std::uint8_t>> proto(3, std::vector<std::uint8_t>(n));
        for (std::size_t g = 0; g < 3; ++g)
            for (std::size_t i = 0; i < n; ++i)
                proto[g][i] = (i + g) % 2 == 0 || i % 5 == g;
        const std::vector<MaskSpec> masks{
            MaskSpec::causal(n), MaskSpec::row_change_from_dense(MaskSpec::continuous_row(start, end).materialize()),
            MaskSpec::continuous_row(start, end), MaskSpec::distinct_columns(group, proto),
            MaskSpec::distinct_rows(group, proto)};
        double worst = 0.0;
        for (const auto &m : masks)
            worst = std::max(worst, relative_linf_diff(masked_lowrank_matvec(f, m, v),
                                                       matvec(dense_lowrank(f, m), v)));
        return worst;
    });
    suite.check("lowrank-attention-4eps-bound", 1.0, [&] {
        const std::size_t n = 32, d = 4;
        const Matrix Q = random_matrix(n, d, seed + 1100), K = random_matrix(n, d, seed + 1101);
        const Matrix V = random_matrix(n, d, seed + 1102);
        const Matrix H = matmul(Q, K.transposed());
        Matrix Hexp(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                Hexp(i, j) = std::exp(H(i, j) / static_cast<double>(d));
        const auto fit = best_rank_k_factors(Hexp, 3);
        const auto mask = MaskSpec::causal(n);
        const Matrix approx = masked_lowrank_attention(fit.factors, mask, V);
        const Matrix exact = naive_masked_attention({Q, K, V}, mask, 1.0 / static_cast<double>(d));
        return max_abs_diff(exact, approx) / (4.0 * fit.achieved * linf_norm(V));
    });
    suite.check("sweep-full-k", 1e-10, [&] {
        BenchConfig c = cfg;
        c.sizes = {64};
        c.k = 4;
        c.reps = 1;
        const auto recs = sweep_error_vs_k(c);
        for (std::size_t i = 1; i < recs.size(); ++i)
            if (recs[i].rel_frobenius > recs[i - 1].rel_frobenius + 1e-12)
                return 1.0;
        return recs.back().rel_frobenius;
    });
    return report;
}

} // namespace convbasis
