#pragma once

#include <random>
#include <vector>

#include "cardsdp/cardsdp.hpp"

namespace testing_support {

using cardsdp::Instance;
using cardsdp::linalg::Matrix;
using cardsdp::linalg::Vector;

/// Q = I, μ = e, u = e.
inline Instance unit_instance(int n, double rho, int aleph) {
  return Instance(Matrix::Identity(n, n), Vector::Ones(n), rho, Vector::Ones(n), aleph);
}

/// The 50-instance oracle suite: n in {6, 8, 10}, aleph in {1, 2, 3}.
inline std::vector<Instance> oracle_suite() {
  std::vector<Instance> out;
  for (int t = 0; t < 50; ++t) {
    cardsdp::GenSpec spec;
    spec.n = 6 + 2 * (t % 3);
    spec.aleph = 1 + (t / 3) % 3;
    spec.seed = 100 + t;
    out.push_back(cardsdp::generate_instance(spec));
  }
  return out;
}

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = nd(rng);
  }
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, int n) {
  return random_matrix(rng, n, 1).col(0);
}

}  // namespace testing_support
