// Copyright 2026 The UCCR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode automatic differentiation over dense double matrices.
//
// Every value is a 2-D Eigen matrix. Row vectors (1 x d) are the convention
// for representations; tables hold one row per entity/word/token. A forward
// pass builds a graph of shared nodes; backward() walks it in reverse
// topological order and accumulates gradients into every node that requires
// one. Parameters are leaf nodes that persist across passes.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace uccr::ag {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = Eigen::Index;

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void accumulate(const Matrix& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  // Direct write access; used by optimizers and finite-difference probes.
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  bool requires_grad() const { return node_->requires_grad; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  double scalar() const { return node_->value(0, 0); }
  void zero_grad() { node_->grad.resize(0, 0); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

Var constant(Matrix value);
Var parameter(Matrix value);
Var zeros(Index rows, Index cols);
Var scalar_constant(double v);

// Seeds d(root)/d(root) = 1 and propagates. root must be 1 x 1.
void backward(const Var& root);

// Elementwise / shape-preserving.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
// a (n x d) times a 1 x 1 variable.
Var mul_scalar(const Var& a, const Var& s);
// a (n x d) plus row vector b (1 x d) broadcast over rows.
Var add_row(const Var& a, const Var& b);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var gelu(const Var& a);  // tanh approximation
Var exp(const Var& a);
Var log(const Var& a);
Var square(const Var& a);

// Linear algebra.
Var matmul(const Var& a, const Var& b);
// a * b^T without materializing the transpose node.
Var matmul_nt(const Var& a, const Var& b);
Var transpose(const Var& a);
// Constant sparse matrix times variable.
Var spmm(const SparseMatrix& s, const Var& b);

// Reductions to 1 x 1.
Var sum(const Var& a);
Var mean(const Var& a);
Var dot(const Var& a, const Var& b);
Var element(const Var& a, Index row, Index col);
// Cosine similarity of two row vectors; both must have nonzero norm.
Var cosine(const Var& a, const Var& b);

// Row-wise normalizers.
Var softmax_rows(const Var& a);
// Entries with mask(i, j) == false receive exactly zero probability. Every
// row must keep at least one unmasked entry.
Var masked_softmax_rows(const Var& a, const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask);
Var log_softmax_rows(const Var& a);
Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);

// Structural.
Var gather_rows(const Var& table, std::span<const int> ids);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(const Var& a, Index start, Index count);
Var slice_rows(const Var& a, Index start, Index count);
// Cuts the graph: the result is a constant holding a's current value.
Var detach(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

}  // namespace uccr::ag
