// optim.cpp

#include "semsin/optim.hpp"

#include <cmath>

namespace semsin::nn {

void adamw_step(const std::vector<Parameter*>& params, OptimizerState& state) {
  if (state.first_moment.empty() && state.step == 0) {
    for (const Parameter* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.first_moment.size() != params.size())
    throw ShapeMismatch("adamw_step moments", state.first_moment.size(), 1, params.size(), 1);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())
      throw ShapeMismatch("adamw_step grad " + p.name, p.value, p.grad);
    if (state.first_moment[i].rows() != p.value.rows() || state.first_moment[i].cols() != p.value.cols())
      throw ShapeMismatch("adamw_step moment " + p.name, p.value, state.first_moment[i]);
  }

  const AdamWConfig& c = state.config;
  ++state.step;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * p.grad;
    v = c.beta2 * v + (1.0 - c.beta2) * p.grad.cwiseProduct(p.grad);
    p.value *= 1.0 - c.lr * c.weight_decay;
    p.value.array() -= c.lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + c.eps);
  }
}

}  // namespace semsin::nn
