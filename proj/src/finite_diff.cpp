#include "lsan/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lsan/error.hpp"

namespace lsan {

std::vector<Tensor> finite_diff_grad(const std::function<double()>& f, std::span<Tensor* const> params, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: eps must be positive");
  auto probe = [&f] {
    const double v = f();
    if (!std::isfinite(v)) throw NumericError("finite_diff_grad: objective is non-finite at a probe point");
    return v;
  };
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (Tensor* p : params) {
    Tensor g(p->shape());
    auto data = p->data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + eps;
      const double up = probe();
      data[i] = saved - eps;
      const double down = probe();
      data[i] = saved;
      g[i] = (up - down) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double max_relative_error(std::span<const Tensor> analytic, std::span<const Tensor> numeric, double floor) {
  if (analytic.size() != numeric.size()) throw DimensionError("max_relative_error: gradient lists differ in length");
  double worst = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    if (analytic[k].size() != numeric[k].size()) throw DimensionError("max_relative_error: gradient shapes differ");
    for (std::size_t i = 0; i < analytic[k].size(); ++i) {
      const double a = analytic[k][i];
      const double n = numeric[k][i];
      const double denom = std::max({std::abs(a), std::abs(n), floor});
      worst = std::max(worst, std::abs(a - n) / denom);
    }
  }
  return worst;
}

}  // namespace lsan
