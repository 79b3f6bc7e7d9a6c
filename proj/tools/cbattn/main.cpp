#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "convbasis/convbasis.hpp"

namespace fs = std::filesystem;
using namespace convbasis;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct Common {
    std::size_t n = 64;
    std::size_t d = 4;
    std::size_t k = 4;
    std::size_t t_window = 1;
    double delta = 1.0;
    double epsilon = 0.0;
    std::uint64_t seed = 1;
    std::size_t reps = 3;
    std::string out;
    std::string format = "csv";
};

void add_common(CLI::App *app, Common &c) {
    app->add_option("--n", c.n, "Sequence length")->check(CLI::PositiveNumber);
    app->add_option("--d", c.d, "Head dimension")->check(CLI::PositiveNumber);
    app->add_option("--k", c.k, "Number of conv basis terms or factor rank")->check(CLI::PositiveNumber);
    app->add_option("--t-window", c.t_window, "Prefix length T of the non-degeneracy test")
        ->check(CLI::PositiveNumber);
    app->add_option("--delta", c.delta, "Non-degeneracy margin")->check(CLI::NonNegativeNumber);
    app->add_option("--epsilon", c.epsilon, "Noise level")->check(CLI::NonNegativeNumber);
    app->add_option("--seed", c.seed, "Random seed");
    app->add_option("--reps", c.reps, "Timing repetitions")->check(CLI::PositiveNumber);
    app->add_option("--out", c.out, "Output path (stdout when empty)");
    app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

BenchConfig to_config(const Common &c) {
    BenchConfig cfg;
    cfg.d = c.d;
    cfg.k = c.k;
    cfg.T = c.t_window;
    cfg.delta = c.delta;
    cfg.epsilon = c.epsilon;
    cfg.seed = c.seed;
    cfg.reps = c.reps;
    cfg.out = c.out;
    cfg.format = c.format;
    return cfg;
}

void emit_text(const std::string &text, const std::string &path) {
    if (path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n')
            std::cout << '\n';
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw FormatError("cannot open " + path + " for writing");
    f << text;
    if (!f)
        throw FormatError("write failed for " + path);
}

void emit_records(const std::vector<BenchRecord> &recs, const Common &c) {
    emit_text(c.format == "json" ? records_to_json(recs) : records_to_csv(recs), c.out);
}

void emit_matrix(const Matrix &m, const std::string &path) {
    if (path.empty()) {
        write_csv(std::cout, m);
        return;
    }
    save_matrix(path, m);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MaskSpec random_mask(const std::string &kind, std::size_t n, std::mt19937_64 &rng) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::bernoulli_distribution coin(0.5);
    if (kind == "causal")
        return MaskSpec::causal(n);
    if (kind == "row-change" || kind == "dense") {
        // Sliding window of random width.
        const std::size_t w = 1 + pick(rng);
        Matrix bits(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = (i + 1 >= w ? i + 1 - w : 0); j <= i; ++j)
                bits(i, j) = 1.0;
        return kind == "dense" ? MaskSpec::dense(bits) : MaskSpec::row_change_from_dense(bits);
    }
    if (kind == "continuous") {
        std::vector<std::size_t> s(n), t(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = pick(rng);
            t[i] = std::uniform_int_distribution<std::size_t>(s[i], n - 1)(rng);
        }
        return MaskSpec::continuous_row(s, t);
    }
    const std::size_t r = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
    std::vector<std::size_t> groups(n);
    for (std::size_t i = 0; i < n; ++i)
        groups[i] = i < r ? i : std::uniform_int_distribution<std::size_t>(0, r - 1)(rng);
    std::vector<std::vector<std::uint8_t>> proto(r, std::vector<std::uint8_t>(n));
    for (auto &row : proto) {
        for (auto &b : row)
            b = coin(rng) ? 1 : 0;
        row[pick(rng)] = 1;
    }
    if (kind == "distinct-columns")
        return MaskSpec::distinct_columns(groups, proto);
    return MaskSpec::distinct_rows(groups, proto);
}

int cmd_bench(const Common &c, const std::vector<std::size_t> &sizes) {
    BenchConfig cfg = to_config(c);
    if (!sizes.empty())
        cfg.sizes = sizes;
    cfg.validate();
    const auto recs = bench_conv_matvec(cfg);
    emit_records(recs, c);
    if (cfg.sizes.size() >= 2)
        std::cerr << "loglog slope naive " << loglog_slope(recs, "naive") << " fft "
                  << loglog_slope(recs, "fft") << '\n';
    return kExitOk;
}

int cmd_infer(const Common &c, const std::string &qpath, const std::string &kpath,
              const std::string &vpath, const std::string &mode) {
    AttentionInput in;
    if (qpath.empty() != kpath.empty() || qpath.empty() != vpath.empty())
        throw InvalidArgument("infer: --query, --key and --value must be given together");
    if (qpath.empty()) {
        in.Q = random_matrix(c.n, c.d, c.seed);
        in.K = random_matrix(c.n, c.d, c.seed + 1);
        in.V = random_matrix(c.n, c.d, c.seed + 2);
    } else {
        in.Q = load_matrix(qpath);
        in.K = load_matrix(kpath);
        in.V = load_matrix(vpath);
    }
    Matrix Y;
    if (mode == "naive")
        Y = naive_masked_attention(in, MaskSpec::causal(in.Q.rows()));
    else if (mode == "exact")
        Y = exact_forward_via_conv(in);
    else if (mode == "conv")
        Y = conv_forward(in, {c.k, c.t_window, c.delta, c.epsilon});
    else
        Y = full_self_attention_forward(in, exact_params(in.Q.rows()), exact_params(in.Q.rows()));
    emit_matrix(Y, c.out);
    return kExitOk;
}

int cmd_recover(const Common &c, const std::string &qpath, const std::string &kpath) {
    const NonDegenSpec params{c.k, c.t_window, c.delta, c.epsilon};
    RecoveryResult rec;
    if (!qpath.empty() || !kpath.empty()) {
        if (qpath.empty() || kpath.empty())
            throw InvalidArgument("recover: --query and --key must be given together");
        const Matrix Q = load_matrix(qpath), K = load_matrix(kpath);
        rec = recover(Q, K, MaskSpec::causal(Q.rows()), params);
    } else {
        auto inst = separated_conv_instance(c.n, c.k, c.t_window, c.delta, c.seed);
        if (c.epsilon > 0.0)
            inst.Q = inst.Q + noise_matrix(c.n, c.epsilon, c.seed + 1);
        rec = recover(inst.Q, inst.K, MaskSpec::causal(c.n), params);
        if (rec.windows() != inst.basis.windows()) {
            std::cerr << "recovered windows differ from the generated basis\n";
            emit_text(rec.to_json(), c.out);
            return kExitFailed;
        }
    }
    emit_text(rec.to_json(), c.out);
    return kExitOk;
}

int cmd_grad_check(const Common &c) {
    const auto fx = conv_training_instance(c.n, c.k, c.seed);
    const auto &inst = fx.instance;

    auto t0 = std::chrono::steady_clock::now();
    const Matrix naive = naive_gradient(inst);
    const double t_naive = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const Matrix fast = fast_gradient(inst, fx.params);
    const double t_fast = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    Matrix fd(inst.d(), inst.d());
    Matrix X = inst.X;
    TrainingInstance probe = inst;
    for (std::size_t a = 0; a < X.rows(); ++a)
        for (std::size_t b = 0; b < X.cols(); ++b) {
            const double h = 1e-6 * std::max(1.0, std::abs(X(a, b)));
            probe.X = X;
            probe.X(a, b) = X(a, b) + h;
            const double up = loss(probe);
            probe.X(a, b) = X(a, b) - h;
            fd(a, b) = (up - loss(probe)) / (2.0 * h);
        }
    const double t_fd = seconds_since(t0);

    const double err_fd = relative_linf_diff(naive, fd);
    const double err_fast = relative_linf_diff(fast, naive);
    const bool ok = err_fd <= 1e-4 && err_fast <= 1e-6;
    const json report{{"n", inst.n()},
                      {"d", inst.d()},
                      {"k", fx.params.k},
                      {"seed", c.seed},
                      {"max_rel_err_fd", err_fd},
                      {"max_rel_err_fast", err_fast},
                      {"passed", ok},
                      {"timings", {{"naive_s", t_naive}, {"fast_s", t_fast}, {"finite_difference_s", t_fd}}}};
    emit_text(report.dump(2), c.out);
    return ok ? kExitOk : kExitFailed;
}

int cmd_lowrank(const Common &c, const std::string &kind) {
    std::mt19937_64 rng(c.seed);
    const LowRankFactors f{random_matrix(c.n, c.k, c.seed), random_matrix(c.n, c.k, c.seed + 1)};
    const MaskSpec mask = random_mask(kind, c.n, rng);
    const Vector v = random_vector(c.n, c.seed + 2);

    Vector fast;
    std::vector<double> times;
    for (std::size_t r = 0; r < c.reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fast = masked_lowrank_matvec(f, mask, v);
        times.push_back(seconds_since(t0));
    }
    std::sort(times.begin(), times.end());

    const auto t0 = std::chrono::steady_clock::now();
    const Matrix W = hadamard(mask.materialize(), matmul(f.U1, f.U2.transposed()));
    const Vector dense = matvec(W, v);
    const double t_dense = seconds_since(t0);

    double err = 0.0;
    for (std::size_t i = 0; i < dense.size(); ++i)
        err = std::max(err, std::abs(fast[i] - dense[i]));
    err /= std::max(1.0, linf_vec(dense));
    const bool ok = err <= 1e-10;
    const json report{{"mask", kind},           {"n", c.n},
                      {"k", c.k},               {"seed", c.seed},
                      {"max_rel_error", err},   {"passed", ok},
                      {"fast_time_s", times[times.size() / 2]}, {"dense_time_s", t_dense}};
    emit_text(report.dump(2), c.out);
    return ok ? kExitOk : kExitFailed;
}

int cmd_sweep(const Common &c, const std::vector<std::size_t> &counts) {
    BenchConfig cfg = to_config(c);
    cfg.sizes = {c.n};
    cfg.validate();
    const auto recs = sweep_error_vs_k(cfg, counts);
    emit_records(recs, c);
    return kExitOk;
}

int cmd_fixtures(const Common &c) {
    if (c.out.empty())
        throw InvalidArgument("fixtures: --out must name a directory");
    const fs::path dir(c.out);
    fs::create_directories(dir);
    const auto inst = separated_conv_instance(c.n, c.k, c.t_window, c.delta, c.seed);
    save_cbm1(dir / "Q.cbm1", inst.Q);
    save_cbm1(dir / "K.cbm1", inst.K);
    save_cbm1(dir / "V.cbm1", random_matrix(c.n, c.d, c.seed + 1));
    save_cbb1(dir / "basis.cbb1", inst.basis);
    std::cout << "wrote Q.cbm1 K.cbm1 V.cbm1 basis.cbb1 to " << dir.string() << '\n';
    return kExitOk;
}

int cmd_verify(const Common &c, double p2_sign) {
    BenchConfig cfg = to_config(c);
    VerificationOptions opts;
    opts.p2_sign = p2_sign;
    const auto report = run_verification_suite(cfg, opts);
    emit_text(report.to_json(), c.out);
    for (const auto &chk : report.checks)
        if (!chk.passed)
            std::cerr << "FAIL " << chk.name << ": measured " << chk.measured << " bound " << chk.bound << '\n';
    return report.passed() ? kExitOk : kExitFailed;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Convolution-basis attention toolkit"};
    app.require_subcommand(1);

    Common common;
    std::vector<std::size_t> sizes, counts;
    std::string query, key, value, mode = "exact", mask_kind = "causal";
    double p2_sign = -1.0;

    auto *bench = app.add_subcommand("bench", "Runtime benchmarks");
    bench->require_subcommand(1);
    auto *conv_mv = bench->add_subcommand("conv-matvec", "Naive vs FFT conv matvec timing");
    add_common(conv_mv, common);
    conv_mv->add_option("--sizes", sizes, "Sequence lengths")->delimiter(',');

    auto *infer = app.add_subcommand("infer", "Causal attention forward pass");
    add_common(infer, common);
    infer->add_option("--query", query, "Q matrix file (.cbm1 or .csv)");
    infer->add_option("--key", key, "K matrix file");
    infer->add_option("--value", value, "V matrix file");
    infer->add_option("--mode", mode, "Forward algorithm")
        ->check(CLI::IsMember({"naive", "exact", "conv", "full"}));

    auto *rec = app.add_subcommand("recover", "Recover a conv basis from Q, K");
    add_common(rec, common);
    rec->add_option("--query", query, "Q matrix file");
    rec->add_option("--key", key, "K matrix file");

    auto *grad = app.add_subcommand("grad-check", "Compare finite-difference, naive and fast gradients");
    add_common(grad, common);

    auto *lowrank = app.add_subcommand("lowrank", "Masked low-rank matvec against the dense product");
    add_common(lowrank, common);
    lowrank->add_option("--mask", mask_kind, "Mask family")
        ->check(CLI::IsMember(
            {"causal", "row-change", "continuous", "distinct-columns", "distinct-rows", "dense"}));

    auto *sweep = app.add_subcommand("sweep-k", "Relative error against the number of basis terms");
    add_common(sweep, common);
    sweep->add_option("--counts", counts, "Term counts to evaluate (default 1..k)")->delimiter(',');

    auto *fixtures = app.add_subcommand("fixtures", "Write a seeded instance to disk");
    add_common(fixtures, common);

    auto *verify = app.add_subcommand("verify", "Run the oracle verification suite");
    add_common(verify, common);
    verify->add_option("--p2-sign", p2_sign, "Sign of the second gradient term")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (conv_mv->parsed())
            return cmd_bench(common, sizes);
        if (infer->parsed())
            return cmd_infer(common, query, key, value, mode);
        if (rec->parsed())
            return cmd_recover(common, query, key);
        if (grad->parsed())
            return cmd_grad_check(common);
        if (lowrank->parsed())
            return cmd_lowrank(common, mask_kind);
        if (sweep->parsed())
            return cmd_sweep(common, counts);
        if (fixtures->parsed())
            return cmd_fixtures(common);
        if (verify->parsed())
            return cmd_verify(common, p2_sign);
    } catch (const InvalidArgument &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailed;
    }
    return kExitUsage;
}
