#include <cmath>

#include "convbasis/bench.hpp"
#include "convbasis/error.hpp"
#include "doctest.h"

using namespace convbasis;

TEST_CASE("records round trip through csv and json") {
    std::vector<BenchRecord> recs{{1024, 4, 4, "naive", 12345.5, 2097152.0, 0.1 + 0.2, 1e-17},
                                  {2048, 4, 4, "fft", 1.0 / 3.0, 3.0e5, 0.0, 2.5e-300}};
    const std::string csv = records_to_csv(recs);
    CHECK(csv.rfind("n,d,k,method,time_ns,flops,max_error,rel_frobenius\n", 0) == 0);
    CHECK(records_from_csv(csv) == recs);
    CHECK(records_from_json(records_to_json(recs)) == recs);
    CHECK(records_from_csv(records_to_csv({})).empty());
    CHECK_THROWS_AS(records_from_csv("n,d\n1,2\n"), FormatError);
    CHECK_THROWS_AS(records_from_csv("n,d,k,method,time_ns,flops,max_error,rel_frobenius\n1,2,x,a,1,1,1,1\n"),
                    FormatError);
    CHECK_THROWS_AS(records_from_json("{"), FormatError);
}

TEST_CASE("config validation") {
    BenchConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.format = "xml";
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.reps = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.sizes = {1};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("conv matvec benchmark records") {
    BenchConfig cfg;
    cfg.sizes = {64, 128, 256};
    cfg.reps = 1;
    const auto recs = bench_conv_matvec(cfg);
    CHECK(recs.size() == 6);
    for (const auto &r : recs) {
        CHECK(r.time_ns > 0.0);
        CHECK(r.max_error < 1e-9);
        if (r.method == "naive")
            CHECK(r.flops == 2.0 * static_cast<double>(r.n) * static_cast<double>(r.n));
    }
    std::vector<BenchRecord> synth;
    for (std::size_t n : {100u, 200u, 400u})
        synth.push_back({n, 1, 1, "x", 3.0 * static_cast<double>(n * n), 0, 0, 0});
    CHECK(loglog_slope(synth, "x") == doctest::Approx(2.0));
    CHECK_THROWS_AS(loglog_slope(synth, "missing"), InvalidArgument);
}

TEST_CASE("error sweep") {
    BenchConfig cfg;
    cfg.sizes = {48};
    cfg.k = 5;
    const auto a = sweep_error_vs_k(cfg);
    const auto b = sweep_error_vs_k(cfg);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].k == i + 1);
        CHECK(a[i].rel_frobenius == b[i].rel_frobenius);
        if (i > 0)
            CHECK(a[i].rel_frobenius <= a[i - 1].rel_frobenius + 1e-12);
    }
    CHECK(a.back().rel_frobenius < 1e-10);
    CHECK_THROWS_AS(sweep_error_vs_k(cfg, {0}), InvalidArgument);
    CHECK_THROWS_AS(sweep_error_vs_k(cfg, {6}), InvalidArgument);
}

TEST_CASE("verification suite") {
    BenchConfig cfg;
    const auto ok = run_verification_suite(cfg);
    for (const auto &c : ok.checks) {
        INFO(c.name << " measured " << c.measured << " bound " << c.bound);
        CHECK(c.passed);
    }
    CHECK(ok.passed());
    CHECK(ok.to_json().find("\"fast-gradient-vs-naive\"") != std::string::npos);

    VerificationOptions broken;
    broken.p2_sign = 1.0;
    const auto bad = run_verification_suite(cfg, broken);
    CHECK_FALSE(bad.passed());
}
