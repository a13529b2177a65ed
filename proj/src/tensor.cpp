// tensor.cpp - tape bookkeeping and the primitive op set

#include "semsin/tensor.hpp"

#include <cmath>

namespace semsin::nn {

namespace {

std::string dims(std::size_t r, std::size_t c) { return "[" + std::to_string(r) + "x" + std::to_string(c) + "]"; }

}  // namespace

ShapeMismatch::ShapeMismatch(const std::string& op, const Matrix& a, const Matrix& b)
    : ShapeMismatch(op, static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.cols()),
                    static_cast<std::size_t>(b.rows()), static_cast<std::size_t>(b.cols())) {}

ShapeMismatch::ShapeMismatch(const std::string& op, std::size_t ar, std::size_t ac, std::size_t br,
                             std::size_t bc)
    : Error("ShapeMismatch", op + ": shapes " + dims(ar, ac) + " and " + dims(br, bc) + " are incompatible") {}

// --- parameters ----------------------------------------------------------

Parameter& ParameterStore::add(const std::string& name, std::size_t rows, std::size_t cols) {
  if (index_.count(name)) throw Error("DuplicateParameter", "parameter '" + name + "' already exists");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  p->grad = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("UnknownParameter", "no parameter named '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("UnknownParameter", "no parameter named '" + name + "'");
  return *params_[it->second];
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

void ParameterStore::assign(const ParameterStore& other) {
  if (other.size() != size()) throw Error("ShapeMismatch", "parameter stores differ in size");
  for (auto& p : params_) {
    const Parameter& src = other.at(p->name);
    if (src.value.rows() != p->value.rows() || src.value.cols() != p->value.cols())
      throw ShapeMismatch("assign " + p->name, p->value, src.value);
    p->value = src.value;
  }
}

void init_xavier_uniform(Parameter& p, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = rng.uniform(-limit, limit);
}

void init_normal(Parameter& p, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = rng.normal(0.0, stddev);
}

void init_zeros(Parameter& p) { p.value.setZero(); }

// --- tape ----------------------------------------------------------------

const Matrix& Tensor::value() const { return tape_->value(id_); }

Tensor Tape::constant(Matrix value) {
  nodes_.push_back({std::move(value), Matrix(), {}, nullptr, nullptr, false});
  return {this, nodes_.size() - 1};
}

Tensor Tape::variable(Matrix value) {
  nodes_.push_back({std::move(value), Matrix(), {}, nullptr, nullptr, true});
  return {this, nodes_.size() - 1};
}

Tensor Tape::parameter(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return {this, it->second};
  nodes_.push_back({p.value, Matrix(), {}, nullptr, &p, true});
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Tensor Tape::record(Matrix value, std::vector<std::size_t> inputs, Backward backward) {
  bool needs = false;
  for (std::size_t id : inputs) needs = needs || nodes_[id].needs_grad;
  nodes_.push_back({std::move(value), Matrix(), std::move(inputs), needs ? std::move(backward) : Backward{},
                    nullptr, needs});
  return {this, nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::accumulate_rows(std::size_t id, const std::vector<std::size_t>& rows, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    n.grad.row(static_cast<Eigen::Index>(rows[i])) += g.row(static_cast<Eigen::Index>(i));
}

Matrix Tape::grad(const Tensor& t) const {
  const Node& n = nodes_[t.id()];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape() != this) throw Error("ForeignTensor", "loss was recorded on another tape");
  const Matrix& v = nodes_[loss.id()].value;
  if (v.rows() != 1 || v.cols() != 1)
    throw Error("NonScalarLoss", "backward needs a 1x1 loss, got " + dims(static_cast<std::size_t>(v.rows()),
                                                                          static_cast<std::size_t>(v.cols())));
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id()].needs_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  // Node ids are a topological order: inputs always precede outputs.
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) n.param->grad += n.grad;
  }
}

// --- ops -----------------------------------------------------------------

namespace {

Tape& same_tape(const Tensor& a, const Tensor& b) {
  if (a.tape() != b.tape()) throw Error("ForeignTensor", "operands live on different tapes");
  return *a.tape();
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  if (a.cols() != b.rows()) throw ShapeMismatch("matmul", a.value(), b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return tape.record(a.value() * b.value(), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs_grad(ai)) t.accumulate(ai, g * t.value(bi).transpose());
    if (t.needs_grad(bi)) t.accumulate(bi, t.value(ai).transpose() * g);
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t ai = a.id();
  return a.tape()->record(a.value().transpose(), {ai}, [ai](Tape& t, std::size_t self) {
    t.accumulate(ai, t.grad_of(self).transpose());
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  const std::size_t ai = a.id(), bi = b.id();
  if (a.rows() == b.rows() && a.cols() == b.cols()) {
    return tape.record(a.value() + b.value(), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
      t.accumulate(ai, t.grad_of(self));
      t.accumulate(bi, t.grad_of(self));
    });
  }
  if (b.rows() == 1 && a.cols() == b.cols()) {
    Matrix out = a.value();
    out.rowwise() += b.value().row(0);
    return tape.record(std::move(out), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
      t.accumulate(ai, t.grad_of(self));
      if (t.needs_grad(bi)) t.accumulate(bi, t.grad_of(self).colwise().sum());
    });
  }
  throw ShapeMismatch("add", a.value(), b.value());
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatch("mul", a.value(), b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return tape.record(a.value().cwiseProduct(b.value()), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs_grad(ai)) t.accumulate(ai, g.cwiseProduct(t.value(bi)));
    if (t.needs_grad(bi)) t.accumulate(bi, g.cwiseProduct(t.value(ai)));
  });
}

Tensor scale(const Tensor& a, double s) {
  const std::size_t ai = a.id();
  return a.tape()->record(a.value() * s, {ai}, [ai, s](Tape& t, std::size_t self) {
    t.accumulate(ai, t.grad_of(self) * s);
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error("ShapeMismatch", "concat_cols of nothing");
  Tape& tape = *parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids, widths;
  for (const auto& p : parts) {
    same_tape(parts.front(), p);
    if (p.rows() != rows) throw ShapeMismatch("concat_cols", parts.front().value(), p.value());
    ids.push_back(p.id());
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, static_cast<Eigen::Index>(p.cols())) = p.value();
    offset += static_cast<Eigen::Index>(p.cols());
  }
  return tape.record(std::move(out), ids, [ids, widths](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_of(self);
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto w = static_cast<Eigen::Index>(widths[i]);
      if (t.needs_grad(ids[i])) t.accumulate(ids[i], g.middleCols(off, w));
      off += w;
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error("ShapeMismatch", "concat_rows of nothing");
  Tape& tape = *parts.front().tape();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids, heights;
  for (const auto& p : parts) {
    same_tape(parts.front(), p);
    if (p.cols() != cols) throw ShapeMismatch("concat_rows", parts.front().value(), p.value());
    ids.push_back(p.id());
    heights.push_back(p.rows());
    rows += p.rows();
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleRows(offset, static_cast<Eigen::Index>(p.rows())) = p.value();
    offset += static_cast<Eigen::Index>(p.rows());
  }
  return tape.record(std::move(out), ids, [ids, heights](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_of(self);
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto h = static_cast<Eigen::Index>(heights[i]);
      if (t.needs_grad(ids[i])) t.accumulate(ids[i], g.middleRows(off, h));
      off += h;
    }
  });
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
  if (start + count > a.cols()) throw ShapeMismatch("slice_cols", a.rows(), a.cols(), a.rows(), start + count);
  const std::size_t ai = a.id();
  const auto s = static_cast<Eigen::Index>(start), c = static_cast<Eigen::Index>(count);
  return a.tape()->record(a.value().middleCols(s, c), {ai}, [ai, s, c](Tape& t, std::size_t self) {
    Matrix g = Matrix::Zero(t.value(ai).rows(), t.value(ai).cols());
    g.middleCols(s, c) = t.grad_of(self);
    t.accumulate(ai, g);
  });
}

Tensor relu(const Tensor& a) {
  const std::size_t ai = a.id();
  return a.tape()->record(a.value().cwiseMax(0.0), {ai}, [ai](Tape& t, std::size_t self) {
    const Matrix mask = (t.value(ai).array() > 0.0).cast<double>().matrix();
    t.accumulate(ai, t.grad_of(self).cwiseProduct(mask));
  });
}

Tensor tanh(const Tensor& a) {
  const std::size_t ai = a.id();
  return a.tape()->record(a.value().array().tanh().matrix(), {ai}, [ai](Tape& t, std::size_t self) {
    const Matrix& y = t.value(self);
    t.accumulate(ai, t.grad_of(self).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Tensor sigmoid(const Tensor& a) {
  const std::size_t ai = a.id();
  Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape()->record(std::move(y), {ai}, [ai](Tape& t, std::size_t self) {
    const Matrix& y = t.value(self);
    t.accumulate(ai, t.grad_of(self).cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  });
}

Tensor softmax_rows(const Tensor& a) {
  const std::size_t ai = a.id();
  Matrix y = a.value();
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return a.tape()->record(std::move(y), {ai}, [ai](Tape& t, std::size_t self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad_of(self);
    Matrix dx(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = g.row(r).dot(y.row(r));
      dx.row(r) = (y.row(r).array() * (g.row(r).array() - dot)).matrix();
    }
    t.accumulate(ai, dx);
  });
}

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids) {
  const std::size_t ti = table.id();
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.value().cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= table.rows())
      throw Error("IndexOutOfRange", "row " + std::to_string(ids[i]) + " of a " + std::to_string(table.rows()) +
                                         "-row table");
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(static_cast<Eigen::Index>(ids[i]));
  }
  return table.tape()->record(std::move(out), {ti}, [ti, ids](Tape& t, std::size_t self) {
    t.accumulate_rows(ti, ids, t.grad_of(self));
  });
}

Tensor mean(const Tensor& a, int axis) {
  const std::size_t ai = a.id();
  const Eigen::Index rows = a.value().rows(), cols = a.value().cols();
  if (axis == 0) {
    if (rows == 0) throw Error("ShapeMismatch", "mean over zero rows");
    return a.tape()->record(a.value().colwise().mean(), {ai}, [ai, rows](Tape& t, std::size_t self) {
      Matrix g = t.grad_of(self).replicate(rows, 1) / static_cast<double>(rows);
      t.accumulate(ai, g);
    });
  }
  if (cols == 0) throw Error("ShapeMismatch", "mean over zero columns");
  return a.tape()->record(a.value().rowwise().mean(), {ai}, [ai, cols](Tape& t, std::size_t self) {
    Matrix g = t.grad_of(self).replicate(1, cols) / static_cast<double>(cols);
    t.accumulate(ai, g);
  });
}

Tensor sum(const Tensor& a) {
  const std::size_t ai = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->record(std::move(out), {ai}, [ai](Tape& t, std::size_t self) {
    const double g = t.grad_of(self)(0, 0);
    t.accumulate(ai, Matrix::Constant(t.value(ai).rows(), t.value(ai).cols(), g));
  });
}

Tensor dropout(const Tensor& a, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw Error("InvalidDropout", "dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return a;
  Matrix mask(a.value().rows(), a.value().cols());
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.bernoulli(rate) ? 0.0 : keep;
  const std::size_t ai = a.id();
  Matrix out = a.value().cwiseProduct(mask);
  return a.tape()->record(std::move(out), {ai}, [ai, mask = std::move(mask)](Tape& t, std::size_t self) {
    t.accumulate(ai, t.grad_of(self).cwiseProduct(mask));
  });
}

}  // namespace semsin::nn
