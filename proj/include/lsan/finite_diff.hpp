#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lsan/tensor.hpp"

namespace lsan {

/// Central-difference gradient of a scalar function with respect to every
/// entry of every tensor in `params`. Each entry is perturbed in place and
/// restored before returning. Throws NumericError if `f` is non-finite at
/// any probe point, std::invalid_argument if eps <= 0.
std::vector<Tensor> finite_diff_grad(const std::function<double()>& f, std::span<Tensor* const> params,
                                     double eps = 1e-5);

/// Largest |a - n| / max(|a|, |n|, floor) over all entries of paired
/// gradient lists.
double max_relative_error(std::span<const Tensor> analytic, std::span<const Tensor> numeric, double floor = 1e-8);

}  // namespace lsan
