// gradcheck.hpp - central finite-difference verification of tape gradients

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "semsin/tensor.hpp"

namespace semsin::nn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Scalar function of the given parameters, recorded on the tape it is handed.
/// Must be deterministic (no dropout).
using ScalarFunction = std::function<Tensor(Tape&)>;

/// Max over every coordinate of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
/// where numeric is (f(x+eps) - f(x-eps)) / (2 eps).
GradCheckResult grad_check(const ScalarFunction& f, const std::vector<Parameter*>& params, double eps = 1e-5);

}  // namespace semsin::nn
