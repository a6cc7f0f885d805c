#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "stground/matrix.hpp"

namespace stground::num {

// Scalar loss value plus named gradients, one entry per trainable matrix.
struct GradBundle {
  double value = 0.0;
  std::map<std::string, Matrix> grads;
};

// Minimal reverse-mode tape over matrix values. Nodes are created in forward
// order with eagerly computed values; backward() walks the creation order in
// reverse. The operator set is fixed: matmul, transpose, add, sub, scale,
// row_l2_normalize, row_softmax, mean_rows, concat_rows, and the margin NCE
// head. Accumulation order is deterministic.
class Tape;

struct TapeNode {
  Matrix value;
  Matrix grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  std::vector<TapeNode*> parents;
  std::function<void(TapeNode&)> backward;

  void ensure_grad() {
    if (grad.size() == 0) grad = Matrix(value.rows(), value.cols());
  }
};

class Var {
 public:
  Var() = default;
  Var(Tape* tape, TapeNode* node) : tape_(tape), node_(node) {}

  const Matrix& value() const { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  Tape* tape() const { return tape_; }
  TapeNode* node() const { return node_; }

 private:
  Tape* tape_ = nullptr;
  TapeNode* node_ = nullptr;
};

class Tape {
 public:
  Var constant(Matrix value);
  Var param(Matrix value);

  // Seeds the output (must be 1x1) with grad 1 and propagates.
  void backward(const Var& output);

  TapeNode* emplace(Matrix value, bool requires_grad,
                    std::vector<TapeNode*> parents,
                    std::function<void(TapeNode&)> back);

 private:
  std::vector<std::unique_ptr<TapeNode>> nodes_;
};

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var row_l2_normalize(const Var& a);
Var row_softmax(const Var& a);
Var mean_rows(const Var& a);  // 1 x cols
Var concat_rows(const std::vector<Var>& rows);

// Margin NCE head over a BxB pair-similarity matrix G (G[i][j] = X_i . Y_j).
// Returns a 1x1 scalar.
Var nce_margin_loss(const Var& gram, double margin);

}  // namespace stground::num
