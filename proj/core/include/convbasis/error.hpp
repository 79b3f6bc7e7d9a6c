#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace convbasis {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Shape, length, index or parameter violations.
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// A softmax normalizer vanished or went negative.
class NormalizationError : public Error {
  public:
    NormalizationError(const std::string &what, std::size_t row)
        : Error(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

  private:
    std::size_t row_;
};

/// A scaled attention score exceeds the exp() safety threshold.
class OverflowError : public Error {
  public:
    using Error::Error;
};

/// Recovery ran out of column range before finding the requested term count.
class UnderRankError : public Error {
  public:
    UnderRankError(const std::string &what, std::size_t terms_found)
        : Error(what), terms_found_(terms_found) {}
    std::size_t terms_found() const noexcept { return terms_found_; }

  private:
    std::size_t terms_found_;
};

/// Internal invariant of the recovery loop was violated.
class ConsistencyError : public Error {
  public:
    using Error::Error;
};

/// A fixture could not be produced with the requested guarantees.
class FixtureError : public Error {
  public:
    FixtureError(const std::string &what, double achieved = 0.0)
        : Error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

  private:
    double achieved_;
};

/// Malformed CBM1/CBB1/CSV input.
class FormatError : public Error {
  public:
    using Error::Error;
};

} // namespace convbasis
