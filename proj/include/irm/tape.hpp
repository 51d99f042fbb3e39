#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace irm::nn {

using Matrix = Eigen::MatrixXd;

// A trainable tensor. Gradients accumulate across backward passes until
// zero_grad() is called.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
// tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recorder. Every op appends a node whose backward closure
// distributes the node's gradient onto its inputs. Nodes are replayed in
// reverse creation order, which is a valid topological order.
//
// A tape built with track_gradients = false records values only; it is what
// the inference paths use.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, const Matrix& grad)>;

  explicit Tape(bool track_gradients = true) : track_(track_gradients) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);

  // Leaf tied to a Parameter: backward() adds into p.grad.
  Var parameter(Parameter& p);

  // Leaf that receives a gradient but is not tied to a Parameter.
  Var input(Matrix value);

  // Seeds d(root)/d(root) = 1. root must be 1x1.
  void backward(Var root);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }

  // Gradient w.r.t. a node after backward(); zero-sized if none reached it.
  const Matrix& grad(Var v) const { return nodes_[v.id()].grad; }

  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  // Records an op. `inputs` decide whether the node needs a backward pass.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backprop backprop);
  Var record(Matrix value, std::span<const Var> inputs, Backprop backprop);

  // Adds `g` to the gradient of `v` (no-op for nodes that do not need one).
  void accumulate(Var v, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backprop backprop;
    Parameter* parameter = nullptr;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool track_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// ---- ops -----------------------------------------------------------------

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
// x + broadcast of a 1 x cols row over every row of x
Var add_row(Var x, Var row);
Var scale(Var a, double factor);
Var softmax_rows(Var a);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
// 1 x cols mean over all rows
Var mean_rows(Var a);

struct Segment {
  Eigen::Index start = 0;
  Eigen::Index end = 0;  // exclusive

  Eigen::Index size() const { return end - start; }
  bool operator==(const Segment&) const = default;
};

// One output row per segment: the mean of the rows it covers.
Var segment_mean(Var a, std::span<const Segment> segments);

// Softmax cross-entropy of a 1 x C row of logits against class `label`.
Var cross_entropy(Var logits_row, int label);

// Sum of 1x1 scalars; an empty list yields 0.
Var sum_scalars(Tape& tape, std::span<const Var> scalars);

// sum(a .* weights) as a 1x1 scalar. Used to reduce a tensor output to a
// scalar for gradient checks.
Var weighted_sum(Var a, const Matrix& weights);

// ---- value helpers -------------------------------------------------------

// -log softmax(logits)[label], computed with a max shift.
double cross_entropy(std::span<const double> logits, int label);

Matrix softmax_rows(const Matrix& a);

}  // namespace irm::nn
