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

#include "uccr/params.hpp"

#include <cmath>
#include <stdexcept>

namespace uccr {

ag::Var ParameterSet::add(const std::string& name, ag::Matrix init) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  auto v = ag::parameter(std::move(init));
  items_.emplace_back(name, v);
  return v;
}

const ag::Var& ParameterSet::get(const std::string& name) const {
  for (const auto& [n, v] : items_) {
    if (n == name) return v;
  }
  throw std::out_of_range("no parameter named " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  for (const auto& [n, v] : items_) {
    if (n == name) return true;
  }
  return false;
}

void ParameterSet::zero_grad() {
  for (auto& [n, v] : items_) v.zero_grad();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t total = 0;
  for (const auto& [n, v] : items_) total += static_cast<std::size_t>(v.value().size());
  return total;
}

double ParameterSet::max_abs_grad(const std::string& prefix) const {
  double best = 0.0;
  for (const auto& [n, v] : items_) {
    if (n.rfind(prefix, 0) != 0 || !v.has_grad()) continue;
    best = std::max(best, v.grad().cwiseAbs().maxCoeff());
  }
  return best;
}

bool ParameterSet::all_finite() const {
  for (const auto& [n, v] : items_) {
    if (!v.value().allFinite()) return false;
  }
  return true;
}

ag::Matrix uniform_matrix(ag::Index rows, ag::Index cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  ag::Matrix m(rows, cols);
  // Column-major fill order is part of the determinism contract.
  for (ag::Index j = 0; j < cols; ++j) {
    for (ag::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

ag::Matrix fan_in_matrix(ag::Index rows, ag::Index cols, ag::Index fan_in, Rng& rng) {
  return uniform_matrix(rows, cols, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

Adam::Adam(const ParameterSet& params, AdamOptions options) : opt_(options) {
  for (const auto& [n, v] : params.items()) {
    params_.push_back(v);
    m_.push_back(ag::Matrix::Zero(v.rows(), v.cols()));
    v_.push_back(ag::Matrix::Zero(v.rows(), v.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    const ag::Matrix& g = p.grad();
    m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * g;
    v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * g.cwiseProduct(g);
    p.mutable_value().array() -= opt_.learning_rate * (m_[i].array() / bc1) /
                                 ((v_[i].array() / bc2).sqrt() + opt_.epsilon);
  }
}

}  // namespace uccr
