// tensor.hpp - dense matrices on a reverse-mode gradient tape
//
// Every value is a row-major matrix of doubles; vectors are 1 x n rows.
// A Tape owns the values of one forward pass and the closures that push
// gradients back to its inputs. Trainable weights live in Parameters that
// outlive tapes; Tape::backward accumulates into Parameter::grad.

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "semsin/error.hpp"
#include "semsin/rng.hpp"

namespace semsin::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ShapeMismatch : public Error {
 public:
  ShapeMismatch(const std::string& op, const Matrix& a, const Matrix& b);
  ShapeMismatch(const std::string& op, std::size_t ar, std::size_t ac, std::size_t br, std::size_t bc);
};

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  std::vector<std::size_t> shape() const {
    return {static_cast<std::size_t>(value.rows()), static_cast<std::size_t>(value.cols())};
  }
};

/// Named parameters in insertion order. Addresses stay stable.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, std::size_t rows, std::size_t cols);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  /// Copies values from `other`, which must hold the same names and shapes.
  void assign(const ParameterStore& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

void init_xavier_uniform(Parameter& p, Rng& rng);
void init_normal(Parameter& p, Rng& rng, double stddev);
void init_zeros(Parameter& p);

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; valid while the tape lives.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  std::size_t rows() const { return static_cast<std::size_t>(value().rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(value().cols()); }
  std::vector<std::size_t> shape() const { return {rows(), cols()}; }
  double scalar() const { return value()(0, 0); }

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient.
  Tensor constant(Matrix value);
  /// Leaf with a gradient slot, read back through grad().
  Tensor variable(Matrix value);
  /// Leaf bound to a parameter; repeated calls return the same node.
  Tensor parameter(Parameter& p);

  /// Records an op output. `backward` runs only when some input needs a gradient.
  Tensor record(Matrix value, std::vector<std::size_t> inputs, Backward backward);

  /// Reverse sweep from a 1x1 loss. Parameter leaves add their gradient into
  /// Parameter::grad. Throws Error("NonScalarLoss").
  void backward(const Tensor& loss);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  /// Gradient of a node after backward (zeros if it received none).
  Matrix grad(const Tensor& t) const;
  const Matrix& grad_of(std::size_t id) const { return nodes_[id].grad; }
  void accumulate(std::size_t id, const Matrix& g);
  /// Adds row i of `g` into row rows[i] of the node's gradient.
  void accumulate_rows(std::size_t id, const std::vector<std::size_t>& rows, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> inputs;
    Backward backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

// --- primitive ops -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Elementwise sum; `b` may also be a 1 x cols row broadcast over a's rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
/// Rows of `table` selected by `ids` (embedding lookup).
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids);
/// axis 0: mean over rows -> 1 x cols; axis 1: mean over columns -> rows x 1.
Tensor mean(const Tensor& a, int axis);
Tensor sum(const Tensor& a);
/// Inverted dropout; identity when !training or rate == 0.
Tensor dropout(const Tensor& a, double rate, Rng& rng, bool training);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

}  // namespace semsin::nn
