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

#include "uccr/session_learners.hpp"

#include <cmath>
#include <stdexcept>

namespace uccr {

ag::Var aggregate_historical(const ag::Var& query, std::span<const ag::Var> sessions,
                             const ag::Var& bilinear, double temperature, ag::Matrix* weights) {
  if (!(temperature > 0.0)) throw std::invalid_argument("aggregation temperature must be > 0");
  if (sessions.empty()) {
    if (weights) weights->resize(1, 0);
    return ag::zeros(1, query.cols());
  }
  ag::Var stacked = ag::concat_rows(sessions);  // n x d
  // h_j W_s q^T for all j at once: (n x d)(d x d)(d x 1) -> n x 1.
  ag::Var scores = ag::matmul_nt(ag::matmul(stacked, bilinear), query);
  ag::Var phi = ag::softmax_rows(ag::scale(ag::transpose(scores), 1.0 / temperature));
  if (weights) *weights = phi.value();
  return ag::matmul(phi, stacked);
}

ag::Matrix positional_weights(int n) {
  ag::Matrix w(1, n);
  for (int m = 0; m < n; ++m) w(0, m) = static_cast<double>(m + 1);
  if (n == 0) return w;
  w = (w.array() - w.maxCoeff()).exp().matrix();
  return w / w.sum();
}

ag::Var session_word_repr(std::span<const int> words, const ag::Var& word_table,
                          const ag::Var& output_map) {
  if (words.empty()) return ag::zeros(1, output_map.rows());
  ag::Var rows = ag::gather_rows(word_table, words);
  ag::Var s = ag::constant(positional_weights(static_cast<int>(words.size())));
  return ag::matmul_nt(ag::matmul(s, rows), output_map);
}

ag::Var historical_word_repr(std::span<const ag::Var> session_reprs, ag::Index dim) {
  if (session_reprs.empty()) return ag::zeros(1, dim);
  ag::Var s = ag::constant(positional_weights(static_cast<int>(session_reprs.size())));
  return ag::matmul(s, ag::concat_rows(session_reprs));
}

GateOutput intent_gate(const ag::Var& r_w, const ag::Var& r_e, const ag::Var& gate_weight) {
  if (r_w.cols() != r_e.cols() || gate_weight.cols() != 2 * r_w.cols() || gate_weight.rows() != 1) {
    throw std::invalid_argument("intent_gate dimension mismatch");
  }
  const ag::Var parts[] = {r_w, r_e};
  ag::Var tau = ag::sigmoid(ag::matmul_nt(ag::concat_cols(parts), gate_weight));
  ag::Var mixed = ag::mul_scalar(r_w, tau) + ag::mul_scalar(r_e, ag::add_scalar(ag::neg(tau), 1.0));
  return {mixed, tau};
}

ag::Var historical_item_repr(const std::vector<std::vector<int>>& session_item_entities,
                             const ag::Var& entity_table, const AttentionPoolParameters& pool,
                             const ag::Var& current_intent, const ag::Var& bilinear, double temperature) {
  std::vector<ag::Var> per_session;
  for (const auto& items : session_item_entities) {
    if (items.empty()) continue;
    per_session.push_back(pool_ids(items, entity_table, pool));
  }
  return aggregate_historical(current_intent, per_session, bilinear, temperature);
}

}  // namespace uccr
