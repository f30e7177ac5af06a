#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <stdexcept>
#include <string>

namespace liqvol {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Date = std::chrono::sys_days;

/// Raised when an input makes a quantity undefined (zero denominators,
/// all-zero days, singular matrices beyond the regularization floor).
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised on malformed input files; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

std::string format_date(Date d);
Date parse_date(const std::string& text);

}  // namespace liqvol
