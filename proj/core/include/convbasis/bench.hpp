#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace convbasis {

struct BenchConfig {
    std::vector<std::size_t> sizes{1024, 2048, 4096, 8192, 16384};
    std::size_t d = 4;
    std::size_t k = 4;
    std::size_t T = 1;
    double delta = 1.0;
    double epsilon = 0.0;
    std::uint64_t seed = 1;
    std::size_t reps = 3;
    std::string out;
    std::string format = "csv";

    /// Sizes >= 2, reps >= 1, format csv or json.
    void validate() const;
};

struct BenchRecord {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t k = 0;
    std::string method;
    double time_ns = 0.0;
    double flops = 0.0;
    double max_error = 0.0;
    double rel_frobenius = 0.0;

    bool operator==(const BenchRecord &) const = default;
};

/// Times the naive and FFT conv matvec for every size. max_error holds the
/// relative l_inf difference between the two outputs.
std::vector<BenchRecord> bench_conv_matvec(const BenchConfig &cfg);

/// Least-squares slope of log(time) against log(n) over records of one method.
double loglog_slope(const std::vector<BenchRecord> &records, const std::string &method);

/// Recovers the conv basis of a seeded separated instance of size
/// cfg.sizes.front() with cfg.k terms, then for each truncation count runs
/// attention with the largest-window terms and records the relative
/// Frobenius difference to the exact output. Empty counts means 1..k.
std::vector<BenchRecord> sweep_error_vs_k(const BenchConfig &cfg,
                                          std::vector<std::size_t> counts = {});

std::string records_to_csv(const std::vector<BenchRecord> &records);
std::vector<BenchRecord> records_from_csv(const std::string &text);
std::string records_to_json(const std::vector<BenchRecord> &records);
std::vector<BenchRecord> records_from_json(const std::string &text);

struct VerificationCheck {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool passed = false;
};

struct VerificationReport {
    std::vector<VerificationCheck> checks;

    bool passed() const;
    std::string to_json() const;
};

struct VerificationOptions {
    /// Forwarded to fast_gradient; +1 injects a sign error.
    double p2_sign = -1.0;
};

/// Runs the oracle comparisons of every module at small sizes.
VerificationReport run_verification_suite(const BenchConfig &cfg,
                                          const VerificationOptions &options = {});

} // namespace convbasis
