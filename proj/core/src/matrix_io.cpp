#include "convbasis/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "convbasis/error.hpp"

namespace convbasis {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

void write_u64(std::ostream &out, std::uint64_t v) {
    out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

void write_f64(std::ostream &out, double v) {
    out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream &in, const char *what) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char *>(&v), sizeof v))
        throw FormatError(std::string("truncated input reading ") + what);
    return v;
}

void read_f64s(std::istream &in, std::span<double> out) {
    const auto bytes = static_cast<std::streamsize>(out.size() * sizeof(double));
    if (!in.read(reinterpret_cast<char *>(out.data()), bytes))
        throw FormatError("truncated payload");
}

void expect_magic(std::istream &in, const char *magic) {
    std::array<char, 4> buf{};
    if (!in.read(buf.data(), 4) || std::memcmp(buf.data(), magic, 4) != 0)
        throw FormatError(std::string("missing ") + magic + " magic");
}

std::ifstream open_in(const std::filesystem::path &path, bool binary) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in)
        throw FormatError("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path &path, bool binary) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out)
        throw FormatError("cannot write " + path.string());
    return out;
}

void finish(std::ostream &out, const std::filesystem::path &path) {
    out.flush();
    if (!out)
        throw FormatError("write failed for " + path.string());
}

bool is_csv(const std::filesystem::path &path) {
    return path.extension() == ".csv";
}

} // namespace

void write_cbm1(std::ostream &out, const Matrix &m) {
    out.write("CBM1", 4);
    write_u64(out, m.rows());
    write_u64(out, m.cols());
    for (double v : m.data())
        write_f64(out, v);
}

Matrix read_cbm1(std::istream &in) {
    expect_magic(in, "CBM1");
    const auto rows = read_u64(in, "rows");
    const auto cols = read_u64(in, "cols");
    if (rows == 0 || cols == 0 || rows > kMaxElements / cols)
        throw FormatError("CBM1 dimensions out of range");
    std::vector<double> data(rows * cols);
    read_f64s(in, data);
    try {
        return Matrix(rows, cols, std::move(data));
    } catch (const InvalidArgument &e) {
        throw FormatError(std::string("CBM1 payload: ") + e.what());
    }
}

void save_cbm1(const std::filesystem::path &path, const Matrix &m) {
    auto out = open_out(path, true);
    write_cbm1(out, m);
    finish(out, path);
}

Matrix load_cbm1(const std::filesystem::path &path) {
    auto in = open_in(path, true);
    return read_cbm1(in);
}

void write_csv(std::ostream &out, const Matrix &m) {
    std::array<char, 32> buf{};
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j > 0)
                out << ',';
            auto res = std::to_chars(buf.data(), buf.data() + buf.size(), m(i, j));
            out.write(buf.data(), res.ptr - buf.data());
        }
        out << '\n';
    }
}

Matrix read_csv(std::istream &in) {
    std::vector<double> data;
    std::size_t cols = 0, rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::size_t count = 0;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            const auto field = line.substr(pos, comma == std::string::npos
                                                    ? std::string::npos
                                                    : comma - pos);
            const char *first = field.data();
            const char *last = first + field.size();
            while (first < last && *first == ' ')
                ++first;
            while (last > first && last[-1] == ' ')
                --last;
            double v = 0.0;
            auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc() || res.ptr != last)
                throw FormatError("CSV row " + std::to_string(rows + 1) +
                                  ": bad number '" + field + "'");
            data.push_back(v);
            ++count;
            if (comma == std::string::npos)
                break;
            pos = comma + 1;
        }
        if (rows == 0)
            cols = count;
        else if (count != cols)
            throw FormatError("CSV row " + std::to_string(rows + 1) + " has " +
                              std::to_string(count) + " fields, expected " +
                              std::to_string(cols));
        ++rows;
    }
    if (rows == 0)
        throw FormatError("CSV input is empty");
    try {
        return Matrix(rows, cols, std::move(data));
    } catch (const InvalidArgument &e) {
        throw FormatError(std::string("CSV payload: ") + e.what());
    }
}

void save_csv(const std::filesystem::path &path, const Matrix &m) {
    auto out = open_out(path, false);
    write_csv(out, m);
    finish(out, path);
}

Matrix load_csv(const std::filesystem::path &path) {
    auto in = open_in(path, false);
    return read_csv(in);
}

Matrix load_matrix(const std::filesystem::path &path) {
    return is_csv(path) ? load_csv(path) : load_cbm1(path);
}

void save_matrix(const std::filesystem::path &path, const Matrix &m) {
    if (is_csv(path))
        save_csv(path, m);
    else
        save_cbm1(path, m);
}

void write_cbb1(std::ostream &out, const ConvBasis &h) {
    out.write("CBB1", 4);
    write_u64(out, h.n());
    write_u64(out, h.k());
    for (const auto &t : h.terms()) {
        write_u64(out, t.m);
        for (double v : t.b)
            write_f64(out, v);
    }
}

ConvBasis read_cbb1(std::istream &in) {
    expect_magic(in, "CBB1");
    const auto n = read_u64(in, "n");
    const auto k = read_u64(in, "k");
    if (n == 0 || n > kMaxElements || k > n)
        throw FormatError("CBB1 header out of range");
    std::vector<SubConvTerm> terms;
    terms.reserve(k);
    for (std::uint64_t r = 0; r < k; ++r) {
        SubConvTerm t{Vector(n), read_u64(in, "window")};
        read_f64s(in, t.b);
        terms.push_back(std::move(t));
    }
    try {
        return ConvBasis(n, std::move(terms));
    } catch (const InvalidArgument &e) {
        throw FormatError(std::string("CBB1 payload: ") + e.what());
    }
}

void save_cbb1(const std::filesystem::path &path, const ConvBasis &h) {
    auto out = open_out(path, true);
    write_cbb1(out, h);
    finish(out, path);
}

ConvBasis load_cbb1(const std::filesystem::path &path) {
    auto in = open_in(path, true);
    return read_cbb1(in);
}

} // namespace convbasis
