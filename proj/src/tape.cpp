#include "irm/tape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "irm/errors.hpp"

namespace irm::nn {
namespace {

std::string shape_of(const Matrix& m) {
  std::ostringstream out;
  out << "[" << m.rows() << "x" << m.cols() << "]";
  return out.str();
}

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ShapeError("vars belong to different tapes");
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Tape::parameter(Parameter& p) {
  Node node;
  node.value = p.value;
  node.parameter = &p;
  node.requires_grad = track_;
  return push(std::move(node));
}

Var Tape::input(Matrix value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = track_;
  return push(std::move(node));
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backprop backprop) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backprop));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backprop backprop) {
  Node node;
  node.value = std::move(value);
  if (track_) {
    node.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                     [this](Var v) { return nodes_[v.id()].requires_grad; });
    if (node.requires_grad) node.backprop = std::move(backprop);
  }
  return push(std::move(node));
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& node = nodes_[v.id()];
  if (!node.requires_grad) return;
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

void Tape::backward(Var root) {
  if (&root.tape() != this) throw ShapeError("backward root belongs to another tape");
  if (root.rows() != 1 || root.cols() != 1) {
    throw ShapeError("backward root must be a 1x1 scalar, got " + shape_of(root.value()));
  }
  if (!nodes_[root.id()].requires_grad) return;
  nodes_[root.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.size() == 0) continue;
    if (node.backprop) {
      // Copy: the closure may append to nodes_ in principle, and must not
      // alias its own gradient while accumulating into inputs.
      const Matrix g = node.grad;
      node.backprop(*this, g);
    }
    if (node.parameter != nullptr) node.parameter->grad += node.grad;
  }
}

// ---- ops -----------------------------------------------------------------

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul " + shape_of(a.value()) + " * " + shape_of(b.value()));
  }
  return a.tape().record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g * b.value().transpose());
    t.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt " + shape_of(a.value()) + " * " + shape_of(b.value()) + "^T");
  }
  return a.tape().record(a.value() * b.value().transpose(), {a, b},
                         [a, b](Tape& t, const Matrix& g) {
                           t.accumulate(a, g * b.value());
                           t.accumulate(b, g.transpose() * a.value());
                         });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("add " + shape_of(a.value()) + " + " + shape_of(b.value()));
  }
  return a.tape().record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var add_row(Var x, Var row) {
  require_same_tape(x, row);
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw ShapeError("add_row " + shape_of(x.value()) + " + " + shape_of(row.value()));
  }
  Matrix out = x.value().rowwise() + row.value().row(0);
  return x.tape().record(std::move(out), {x, row}, [x, row](Tape& t, const Matrix& g) {
    t.accumulate(x, g);
    t.accumulate(row, g.colwise().sum());
  });
}

Var scale(Var a, double factor) {
  return a.tape().record(a.value() * factor, {a}, [a, factor](Tape& t, const Matrix& g) {
    t.accumulate(a, g * factor);
  });
}

Matrix softmax_rows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double shift = a.row(r).maxCoeff();
    out.row(r) = (a.row(r).array() - shift).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Var softmax_rows(Var a) {
  const Matrix p = softmax_rows(a.value());
  return a.tape().record(p, {a}, [a, p](Tape& t, const Matrix& g) {
    const Eigen::VectorXd dot = (g.array() * p.array()).rowwise().sum();
    Matrix da = p.array() * (g.colwise() - dot).array();
    t.accumulate(a, da);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (Var v : parts) {
    require_same_tape(parts.front(), v);
    if (v.cols() != cols) throw ShapeError("concat_rows column mismatch");
    rows += v.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var v : parts) {
    out.middleRows(at, v.rows()) = v.value();
    at += v.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape().record(std::move(out), parts, [inputs](Tape& t, const Matrix& g) {
    Eigen::Index offset = 0;
    for (Var v : inputs) {
      t.accumulate(v, g.middleRows(offset, v.rows()));
      offset += v.rows();
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (Var v : parts) {
    require_same_tape(parts.front(), v);
    if (v.rows() != rows) throw ShapeError("concat_cols row mismatch");
    cols += v.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var v : parts) {
    out.middleCols(at, v.cols()) = v.value();
    at += v.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape().record(std::move(out), parts, [inputs](Tape& t, const Matrix& g) {
    Eigen::Index offset = 0;
    for (Var v : inputs) {
      t.accumulate(v, g.middleCols(offset, v.cols()));
      offset += v.cols();
    }
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw ShapeError("slice_rows out of range on " + shape_of(a.value()));
  }
  return a.tape().record(a.value().middleRows(start, count), {a},
                         [a, start, count](Tape& t, const Matrix& g) {
                           Matrix da = Matrix::Zero(a.rows(), a.cols());
                           da.middleRows(start, count) = g;
                           t.accumulate(a, da);
                         });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols out of range on " + shape_of(a.value()));
  }
  return a.tape().record(a.value().middleCols(start, count), {a},
                         [a, start, count](Tape& t, const Matrix& g) {
                           Matrix da = Matrix::Zero(a.rows(), a.cols());
                           da.middleCols(start, count) = g;
                           t.accumulate(a, da);
                         });
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw ShapeError("mean_rows of an empty matrix");
  const double n = static_cast<double>(a.rows());
  return a.tape().record(a.value().colwise().mean(), {a}, [a, n](Tape& t, const Matrix& g) {
    Matrix da = g.replicate(a.rows(), 1) / n;
    t.accumulate(a, da);
  });
}

Var segment_mean(Var a, std::span<const Segment> segments) {
  Matrix out(static_cast<Eigen::Index>(segments.size()), a.cols());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    if (s.start < 0 || s.end > a.rows() || s.size() <= 0) {
      throw ShapeError("segment out of range on " + shape_of(a.value()));
    }
    out.row(static_cast<Eigen::Index>(i)) = a.value().middleRows(s.start, s.size()).colwise().mean();
  }
  std::vector<Segment> segs(segments.begin(), segments.end());
  return a.tape().record(std::move(out), {a}, [a, segs](Tape& t, const Matrix& g) {
    Matrix da = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const Segment& s = segs[i];
      const double n = static_cast<double>(s.size());
      for (Eigen::Index r = s.start; r < s.end; ++r) {
        da.row(r) += g.row(static_cast<Eigen::Index>(i)) / n;
      }
    }
    t.accumulate(a, da);
  });
}

double cross_entropy(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw ValidationError("cross_entropy label out of range");
  }
  const double shift = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z - shift);
  return std::log(denom) + shift - logits[static_cast<std::size_t>(label)];
}

Var cross_entropy(Var logits_row, int label) {
  if (logits_row.rows() != 1) throw ShapeError("cross_entropy expects a single row");
  if (label < 0 || label >= logits_row.cols()) {
    throw ValidationError("cross_entropy label out of range");
  }
  const Eigen::RowVectorXd z = logits_row.value().row(0);
  Matrix loss(1, 1);
  loss(0, 0) = cross_entropy(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())),
                             label);
  const Matrix probs = softmax_rows(logits_row.value());
  return logits_row.tape().record(std::move(loss), {logits_row},
                                  [logits_row, probs, label](Tape& t, const Matrix& g) {
                                    Matrix d = probs;
                                    d(0, label) -= 1.0;
                                    t.accumulate(logits_row, d * g(0, 0));
                                  });
}

Var sum_scalars(Tape& tape, std::span<const Var> scalars) {
  Matrix total = Matrix::Zero(1, 1);
  for (Var v : scalars) {
    if (v.rows() != 1 || v.cols() != 1) throw ShapeError("sum_scalars expects 1x1 entries");
    total(0, 0) += v.value()(0, 0);
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return tape.record(std::move(total), scalars, [inputs](Tape& t, const Matrix& g) {
    for (Var v : inputs) t.accumulate(v, g);
  });
}

Var weighted_sum(Var a, const Matrix& weights) {
  if (weights.rows() != a.rows() || weights.cols() != a.cols()) {
    throw ShapeError("weighted_sum weights " + shape_of(weights) + " vs " + shape_of(a.value()));
  }
  Matrix out(1, 1);
  out(0, 0) = (a.value().array() * weights.array()).sum();
  return a.tape().record(std::move(out), {a}, [a, weights](Tape& t, const Matrix& g) {
    t.accumulate(a, weights * g(0, 0));
  });
}

}  // namespace irm::nn
