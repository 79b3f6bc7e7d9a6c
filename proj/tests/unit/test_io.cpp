#include <cstring>
#include <filesystem>
#include <sstream>

#include "convbasis/error.hpp"
#include "convbasis/matrix_io.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace convbasis;

TEST_CASE("CBM1 byte layout") {
    std::stringstream ss;
    write_cbm1(ss, Matrix{{1.0, -2.5}});
    const std::string s = ss.str();
    REQUIRE(s.size() == 4 + 8 + 8 + 16);
    CHECK(s.substr(0, 4) == "CBM1");
    CHECK(static_cast<unsigned char>(s[4]) == 1);
    CHECK(static_cast<unsigned char>(s[12]) == 2);
    double v = 0.0;
    std::memcpy(&v, s.data() + 28, 8);
    CHECK(v == -2.5);
}

TEST_CASE("CBM1 and CSV round trip exactly") {
    oracle::Rng rng(1);
    const Matrix m = rng.mat(5, 3, -1e6, 1e6);
    std::stringstream b;
    write_cbm1(b, m);
    CHECK(read_cbm1(b) == m);
    std::stringstream c;
    write_csv(c, m);
    CHECK(read_csv(c) == m);

    const auto dir = std::filesystem::temp_directory_path();
    save_matrix(dir / "convbasis_io_test.csv", m);
    save_matrix(dir / "convbasis_io_test.cbm", m);
    CHECK(load_matrix(dir / "convbasis_io_test.csv") == m);
    CHECK(load_matrix(dir / "convbasis_io_test.cbm") == m);
}

TEST_CASE("malformed matrices are rejected") {
    std::stringstream magic("XXXX");
    CHECK_THROWS_AS(read_cbm1(magic), FormatError);
    std::stringstream ragged("1,2\n3\n");
    CHECK_THROWS_AS(read_csv(ragged), FormatError);
    std::stringstream word("1,abc\n");
    CHECK_THROWS_AS(read_csv(word), FormatError);
    std::stringstream empty("");
    CHECK_THROWS_AS(read_csv(empty), FormatError);
    std::stringstream nan("1,nan\n");
    CHECK_THROWS_AS(read_csv(nan), FormatError);
    CHECK_THROWS_AS(load_matrix("/nonexistent/dir/m.cbm"), FormatError);
}
