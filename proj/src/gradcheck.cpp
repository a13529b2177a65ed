// gradcheck.cpp

#include "semsin/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace semsin::nn {

GradCheckResult grad_check(const ScalarFunction& f, const std::vector<Parameter*>& params, double eps) {
  if (!(eps > 0.0)) throw Error("InvalidStep", "finite-difference step must be positive");
  for (Parameter* p : params) p->grad.setZero();
  {
    Tape tape;
    Tensor loss = f(tape);
    tape.backward(loss);
  }
  auto evaluate = [&f] {
    Tape tape;
    return f(tape).scalar();
  };

  GradCheckResult result;
  for (Parameter* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& x = p->value.data()[i];
      const double saved = x;
      x = saved + eps;
      const double up = evaluate();
      x = saved - eps;
      const double down = evaluate();
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad.data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double err = std::abs(analytic - numeric) / denom;
      ++result.coordinates;
      if (err > result.max_relative_error || result.worst_parameter.empty()) {
        if (err >= result.max_relative_error) {
          result.max_relative_error = err;
          result.worst_parameter = p->name;
          result.worst_index = static_cast<std::size_t>(i);
          result.worst_analytic = analytic;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace semsin::nn
