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

#include "uccr/mapper.hpp"

#include <cmath>
#include <stdexcept>

namespace uccr {

ag::Var alignment_loss(const AlignmentBatch& batch, double lambda_a) {
  if (batch.v1.size() != batch.v2.size()) throw std::invalid_argument("alignment batch sides differ in size");
  if (!(lambda_a >= 0.0)) throw std::invalid_argument("lambda_a must be >= 0");
  std::vector<std::size_t> active;
  for (std::size_t u = 0; u < batch.v1.size(); ++u) {
    const auto& a = batch.v1[u];
    const auto& b = batch.v2[u];
    if (a.rows() != 1 || b.rows() != 1 || a.cols() != b.cols() ||
        (!batch.v1.empty() && a.cols() != batch.v1.front().cols())) {
      throw std::invalid_argument("alignment vectors must be 1 x d with a common d");
    }
    if (a.value().norm() >= kMinAlignNorm && b.value().norm() >= kMinAlignNorm) active.push_back(u);
  }
  ag::Var positive = ag::zeros(1, 1);
  ag::Var negative = ag::zeros(1, 1);
  for (std::size_t u : active) {
    positive = positive + ag::square(ag::add_scalar(-ag::cosine(batch.v1[u], batch.v2[u]), 1.0));
    for (std::size_t w : active) {
      if (w != u) negative = negative + ag::square(ag::cosine(batch.v1[u], batch.v2[w]));
    }
  }
  return positive + lambda_a * negative;
}

double alignment_loss_value(const ag::Matrix& v1, const ag::Matrix& v2, double lambda_a) {
  ag::NoGradGuard guard;
  AlignmentBatch batch;
  for (ag::Index u = 0; u < v1.rows(); ++u) {
    batch.v1.push_back(ag::constant(v1.row(u)));
    batch.v2.push_back(ag::constant(v2.row(u)));
  }
  if (v1.rows() != v2.rows()) throw std::invalid_argument("alignment batch sides differ in size");
  return alignment_loss(batch, lambda_a).scalar();
}

}  // namespace uccr
