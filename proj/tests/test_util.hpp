#pragma once

#include <cstddef>
#include <vector>

#include "lsan/random.hpp"
#include "lsan/tensor.hpp"

namespace lsan::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = uniform(rng, lo, hi);
  return t;
}

// Reference product used as an oracle: plain triple loop, row-major.
inline std::vector<double> naive_matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a.at(i, p) * b.at(p, j);
  return c;
}

}  // namespace lsan::testing
