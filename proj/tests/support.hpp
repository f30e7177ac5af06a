#pragma once

#include "liqvol/types.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace liqvol::testing {

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n) { return random_matrix(rng, n, 1).col(0); }

// Well-conditioned SPD matrix: G G' plus a ridge.
inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double ridge = 0.1) {
  const Matrix g = random_matrix(rng, n, n);
  return g * g.transpose() + ridge * Matrix::Identity(n, n);
}

// Random PSD matrix of the given rank.
inline Matrix random_psd_rank(std::mt19937_64& rng, Eigen::Index n, Eigen::Index rank) {
  const Matrix g = random_matrix(rng, n, rank);
  return g * g.transpose();
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double rel_frobenius(const Matrix& a, const Matrix& b) {
  const double ref = std::max(1e-300, b.norm());
  return (a - b).norm() / ref;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("liqvol_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace liqvol::testing
