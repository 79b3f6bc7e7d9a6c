#pragma once

#include <filesystem>
#include <iosfwd>

#include "convbasis/conv.hpp"
#include "convbasis/matrix.hpp"

namespace convbasis {

/// CBM1: magic "CBM1", u64 rows, u64 cols, rows*cols f64 row-major, all
/// little-endian.
void write_cbm1(std::ostream &out, const Matrix &m);
Matrix read_cbm1(std::istream &in);
void save_cbm1(const std::filesystem::path &path, const Matrix &m);
Matrix load_cbm1(const std::filesystem::path &path);

/// One row per line, comma separated, written with round-trip precision.
void write_csv(std::ostream &out, const Matrix &m);
Matrix read_csv(std::istream &in);
void save_csv(const std::filesystem::path &path, const Matrix &m);
Matrix load_csv(const std::filesystem::path &path);

/// Picks CBM1 or CSV from the file extension (".csv" means CSV).
Matrix load_matrix(const std::filesystem::path &path);
void save_matrix(const std::filesystem::path &path, const Matrix &m);

/// CBB1: magic "CBB1", u64 n, u64 k, then per term u64 m and n f64.
void write_cbb1(std::ostream &out, const ConvBasis &h);
ConvBasis read_cbb1(std::istream &in);
void save_cbb1(const std::filesystem::path &path, const ConvBasis &h);
ConvBasis load_cbb1(const std::filesystem::path &path);

} // namespace convbasis
