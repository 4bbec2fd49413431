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

#include "uccr/autograd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace uccr::ag {
namespace {

thread_local bool g_grad_enabled = true;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("autograd: ") + what);
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string("autograd: shape mismatch in ") + op + " (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
}

// Builds a result node; the backward closure is recorded only when some
// parent needs a gradient and recording is enabled.
Var make(Matrix value, std::vector<std::shared_ptr<Node>> parents,
         std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& p : parents) any = any || p->requires_grad;
    if (any) {
      node->requires_grad = true;
      node->parents = std::move(parents);
      node->backward_fn = std::move(backward_fn);
    }
  }
  return Var(std::move(node));
}

Matrix softmax_of(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    const double m = a.row(i).maxCoeff();
    out.row(i) = (a.row(i).array() - m).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

}  // namespace

void Node::accumulate(const Matrix& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Var constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Var zeros(Index rows, Index cols) { return constant(Matrix::Zero(rows, cols)); }

Var scalar_constant(double v) { return constant(Matrix::Constant(1, 1, v)); }

void backward(const Var& root) {
  require(root.rows() == 1 && root.cols() == 1, "backward() needs a 1x1 root");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.size() != 0) n->backward_fn(*n);
  }
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  auto pa = a.node(), pb = b.node();
  return make(a.value() + b.value(), {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) pa->accumulate(self.grad);
    if (pb->requires_grad) pb->accumulate(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  auto pa = a.node(), pb = b.node();
  return make(a.value() - b.value(), {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) pa->accumulate(self.grad);
    if (pb->requires_grad) pb->accumulate(-self.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  auto pa = a.node(), pb = b.node();
  return make(a.value().cwiseProduct(b.value()), {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) pa->accumulate(self.grad.cwiseProduct(pb->value));
    if (pb->requires_grad) pb->accumulate(self.grad.cwiseProduct(pa->value));
  });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, double c) {
  auto pa = a.node();
  return make(a.value() * c, {pa}, [pa, c](Node& self) { pa->accumulate(self.grad * c); });
}

Var add_scalar(const Var& a, double c) {
  auto pa = a.node();
  return make((a.value().array() + c).matrix(), {pa},
              [pa](Node& self) { pa->accumulate(self.grad); });
}

Var mul_scalar(const Var& a, const Var& s) {
  require(s.rows() == 1 && s.cols() == 1, "mul_scalar expects a 1x1 scalar");
  auto pa = a.node(), ps = s.node();
  return make(a.value() * s.scalar(), {pa, ps}, [pa, ps](Node& self) {
    if (pa->requires_grad) pa->accumulate(self.grad * ps->value(0, 0));
    if (ps->requires_grad) {
      ps->accumulate(Matrix::Constant(1, 1, self.grad.cwiseProduct(pa->value).sum()));
    }
  });
}

Var add_row(const Var& a, const Var& b) {
  require(b.rows() == 1 && b.cols() == a.cols(), "add_row expects a matching 1xd row");
  auto pa = a.node(), pb = b.node();
  Matrix out = a.value();
  out.rowwise() += b.value().row(0);
  return make(std::move(out), {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) pa->accumulate(self.grad);
    if (pb->requires_grad) pb->accumulate(self.grad.colwise().sum());
  });
}

Var tanh(const Var& a) {
  auto pa = a.node();
  Matrix out = a.value().array().tanh().matrix();
  return make(out, {pa}, [pa, out](Node& self) {
    pa->accumulate((self.grad.array() * (1.0 - out.array().square())).matrix());
  });
}

Var sigmoid(const Var& a) {
  auto pa = a.node();
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return make(out, {pa}, [pa, out](Node& self) {
    pa->accumulate((self.grad.array() * out.array() * (1.0 - out.array())).matrix());
  });
}

Var relu(const Var& a) {
  auto pa = a.node();
  return make(a.value().cwiseMax(0.0), {pa}, [pa](Node& self) {
    pa->accumulate((self.grad.array() * (pa->value.array() > 0.0).cast<double>()).matrix());
  });
}

// tanh approximation: 0.5 x (1 + tanh(c (x + 0.044715 x^3))).
Var gelu(const Var& a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
  auto pa = a.node();
  const Eigen::ArrayXXd x = a.value().array();
  const Eigen::ArrayXXd t = (c * (x + 0.044715 * x.cube())).tanh();
  const Eigen::ArrayXXd slope = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t.square()) * c * (1.0 + 3.0 * 0.044715 * x.square());
  return make((0.5 * x * (1.0 + t)).matrix(), {pa},
              [pa, slope](Node& self) { pa->accumulate((self.grad.array() * slope).matrix()); });
}

Var exp(const Var& a) {
  auto pa = a.node();
  Matrix out = a.value().array().exp().matrix();
  return make(out, {pa}, [pa, out](Node& self) { pa->accumulate(self.grad.cwiseProduct(out)); });
}

Var log(const Var& a) {
  auto pa = a.node();
  return make(a.value().array().log().matrix(), {pa}, [pa](Node& self) {
    pa->accumulate((self.grad.array() / pa->value.array()).matrix());
  });
}

Var square(const Var& a) {
  auto pa = a.node();
  return make(a.value().array().square().matrix(), {pa}, [pa](Node& self) {
    pa->accumulate((2.0 * self.grad.array() * pa->value.array()).matrix());
  });
}

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul inner dimension mismatch");
  auto pa = a.node(), pb = b.node();
  return make(a.value() * b.value(), {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) pa->accumulate(self.grad * pb->value.transpose());
    if (pb->requires_grad) pb->accumulate(pa->value.transpose() * self.grad);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require(a.cols() == b.cols(), "matmul_nt inner dimension mismatch");
  auto pa = a.node(), pb = b.node();
  return make(a.value() * b.value().transpose(), {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) pa->accumulate(self.grad * pb->value);
    if (pb->requires_grad) pb->accumulate(self.grad.transpose() * pa->value);
  });
}

Var transpose(const Var& a) {
  auto pa = a.node();
  return make(a.value().transpose(), {pa},
              [pa](Node& self) { pa->accumulate(self.grad.transpose()); });
}

Var spmm(const SparseMatrix& s, const Var& b) {
  require(s.cols() == b.rows(), "spmm inner dimension mismatch");
  auto pb = b.node();
  return make(Matrix(s * b.value()), {pb}, [pb, s](Node& self) {
    pb->accumulate(Matrix(s.transpose() * self.grad));
  });
}

Var sum(const Var& a) {
  auto pa = a.node();
  return make(Matrix::Constant(1, 1, a.value().sum()), {pa}, [pa](Node& self) {
    pa->accumulate(Matrix::Constant(pa->value.rows(), pa->value.cols(), self.grad(0, 0)));
  });
}

Var mean(const Var& a) {
  require(a.value().size() > 0, "mean of empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var dot(const Var& a, const Var& b) { return sum(mul(a, b)); }

Var element(const Var& a, Index row, Index col) {
  require(row >= 0 && row < a.rows() && col >= 0 && col < a.cols(), "element index out of range");
  auto pa = a.node();
  return make(Matrix::Constant(1, 1, a.value()(row, col)), {pa}, [pa, row, col](Node& self) {
    Matrix g = Matrix::Zero(pa->value.rows(), pa->value.cols());
    g(row, col) = self.grad(0, 0);
    pa->accumulate(g);
  });
}

Var cosine(const Var& a, const Var& b) {
  require(a.rows() == 1 && b.rows() == 1 && a.cols() == b.cols(), "cosine expects two 1xd rows");
  auto pa = a.node(), pb = b.node();
  const double sa = a.value().row(0).dot(a.value().row(0));
  const double sb = b.value().row(0).dot(b.value().row(0));
  require(sa > 0.0 && sb > 0.0, "cosine of a zero vector");
  const double na = std::sqrt(sa), nb = std::sqrt(sb);
  // sqrt(sa * sb) makes cos(v, v) exactly 1.
  const double c = a.value().row(0).dot(b.value().row(0)) / std::sqrt(sa * sb);
  return make(Matrix::Constant(1, 1, c), {pa, pb}, [pa, pb, na, nb, c](Node& self) {
    const double g = self.grad(0, 0);
    // d cos / da = b / (|a||b|) - cos * a / |a|^2
    if (pa->requires_grad) {
      pa->accumulate(g * (pb->value / (na * nb) - c * pa->value / (na * na)));
    }
    if (pb->requires_grad) {
      pb->accumulate(g * (pa->value / (na * nb) - c * pb->value / (nb * nb)));
    }
  });
}

Var softmax_rows(const Var& a) {
  require(a.cols() > 0, "softmax over an empty row");
  auto pa = a.node();
  Matrix out = softmax_of(a.value());
  return make(out, {pa}, [pa, out](Node& self) {
    // dx = y * (g - sum(g * y))
    Matrix gy = self.grad.cwiseProduct(out);
    Matrix dx = gy - out.cwiseProduct(gy.rowwise().sum().replicate(1, out.cols()));
    pa->accumulate(dx);
  });
}

Var masked_softmax_rows(const Var& a,
                        const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
  require(mask.rows() == a.rows() && mask.cols() == a.cols(), "mask shape mismatch");
  auto pa = a.node();
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < a.cols(); ++j) {
      if (mask(i, j)) m = std::max(m, a.value()(i, j));
    }
    require(std::isfinite(m), "masked softmax row has no unmasked entry");
    double z = 0.0;
    for (Index j = 0; j < a.cols(); ++j) {
      if (mask(i, j)) {
        out(i, j) = std::exp(a.value()(i, j) - m);
        z += out(i, j);
      }
    }
    out.row(i) /= z;
  }
  return make(out, {pa}, [pa, out](Node& self) {
    Matrix gy = self.grad.cwiseProduct(out);
    Matrix dx = gy - out.cwiseProduct(gy.rowwise().sum().replicate(1, out.cols()));
    pa->accumulate(dx);
  });
}

Var log_softmax_rows(const Var& a) {
  require(a.cols() > 0, "log_softmax over an empty row");
  auto pa = a.node();
  Matrix out(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    const double m = a.value().row(i).maxCoeff();
    const double lse = m + std::log((a.value().row(i).array() - m).exp().sum());
    out.row(i) = (a.value().row(i).array() - lse).matrix();
  }
  return make(out, {pa}, [pa, out](Node& self) {
    // dx = g - softmax * sum(g)
    Matrix p = out.array().exp().matrix();
    Matrix dx = self.grad - p.cwiseProduct(self.grad.rowwise().sum().replicate(1, out.cols()));
    pa->accumulate(dx);
  });
}

Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Index d = x.cols();
  require(gain.rows() == 1 && gain.cols() == d && bias.rows() == 1 && bias.cols() == d,
          "layer_norm gain/bias must be 1xd");
  auto px = x.node(), pg = gain.node(), pb = bias.node();
  Matrix xhat(x.rows(), d);
  Eigen::VectorXd inv_std(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const double mu = x.value().row(i).mean();
    const double var = (x.value().row(i).array() - mu).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = ((x.value().row(i).array() - mu) * inv_std(i)).matrix();
  }
  Matrix out = xhat;
  for (Index i = 0; i < out.rows(); ++i) {
    out.row(i) = (xhat.row(i).array() * gain.value().row(0).array() + bias.value().row(0).array())
                     .matrix();
  }
  return make(out, {px, pg, pb}, [px, pg, pb, xhat, inv_std, d](Node& self) {
    if (pg->requires_grad) pg->accumulate(self.grad.cwiseProduct(xhat).colwise().sum());
    if (pb->requires_grad) pb->accumulate(self.grad.colwise().sum());
    if (px->requires_grad) {
      Matrix dx(self.grad.rows(), d);
      for (Index i = 0; i < self.grad.rows(); ++i) {
        Eigen::RowVectorXd gh =
            (self.grad.row(i).array() * pg->value.row(0).array()).matrix();
        const double mean_gh = gh.mean();
        const double mean_gh_xhat = gh.cwiseProduct(xhat.row(i)).mean();
        dx.row(i) = (inv_std(i) *
                     (gh.array() - mean_gh - xhat.row(i).array() * mean_gh_xhat))
                        .matrix();
      }
      px->accumulate(dx);
    }
  });
}

Var gather_rows(const Var& table, std::span<const int> ids) {
  const Index n = static_cast<Index>(ids.size());
  Matrix out(n, table.cols());
  for (Index i = 0; i < n; ++i) {
    const int id = ids[static_cast<size_t>(i)];
    require(id >= 0 && id < table.rows(), "gather_rows id out of range");
    out.row(i) = table.value().row(id);
  }
  auto pt = table.node();
  std::vector<int> idx(ids.begin(), ids.end());
  return make(std::move(out), {pt}, [pt, idx = std::move(idx)](Node& self) {
    Matrix g = Matrix::Zero(pt->value.rows(), pt->value.cols());
    for (size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += self.grad.row(static_cast<Index>(i));
    pt->accumulate(g);
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols of nothing");
  const Index rows = parts[0].rows();
  Index cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::shared_ptr<Node>> nodes;
  std::vector<Index> offsets;
  Index off = 0;
  for (const auto& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    nodes.push_back(p.node());
    offsets.push_back(off);
    off += p.cols();
  }
  auto parents = nodes;
  return make(std::move(out), std::move(parents), [nodes, offsets](Node& self) {
    for (size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i]->requires_grad) {
        nodes[i]->accumulate(self.grad.middleCols(offsets[i], nodes[i]->value.cols()));
      }
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows of nothing");
  const Index cols = parts[0].cols();
  Index rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<std::shared_ptr<Node>> nodes;
  std::vector<Index> offsets;
  Index off = 0;
  for (const auto& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    nodes.push_back(p.node());
    offsets.push_back(off);
    off += p.rows();
  }
  auto parents = nodes;
  return make(std::move(out), std::move(parents), [nodes, offsets](Node& self) {
    for (size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i]->requires_grad) {
        nodes[i]->accumulate(self.grad.middleRows(offsets[i], nodes[i]->value.rows()));
      }
    }
  });
}

Var slice_cols(const Var& a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols out of range");
  auto pa = a.node();
  return make(a.value().middleCols(start, count), {pa}, [pa, start, count](Node& self) {
    Matrix g = Matrix::Zero(pa->value.rows(), pa->value.cols());
    g.middleCols(start, count) = self.grad;
    pa->accumulate(g);
  });
}

Var slice_rows(const Var& a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows out of range");
  auto pa = a.node();
  return make(a.value().middleRows(start, count), {pa}, [pa, start, count](Node& self) {
    Matrix g = Matrix::Zero(pa->value.rows(), pa->value.cols());
    g.middleRows(start, count) = self.grad;
    pa->accumulate(g);
  });
}

Var detach(const Var& a) { return constant(a.value()); }

}  // namespace uccr::ag
