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

// Current- and historical-session view learners.

#pragma once

#include <span>
#include <vector>

#include "uccr/autograd.hpp"
#include "uccr/graphenc.hpp"

namespace uccr {

// Pooled representation of mentioned entities (or words) of one session,
// current or historical: gather rows of the encoded table, then pool.
inline ag::Var session_mention_repr(std::span<const int> ids, const ag::Var& table,
                                    const AttentionPoolParameters& pool) {
  return pool_ids(ids, table, pool);
}

// Query-aware aggregation of historical session vectors:
//   phi_j = softmax_j(h_j W_s q^T / temperature),  out = sum_j phi_j h_j.
// No sessions gives the zero vector. Throws std::invalid_argument when
// temperature <= 0. `weights` receives phi when given.
ag::Var aggregate_historical(const ag::Var& query, std::span<const ag::Var> sessions,
                             const ag::Var& bilinear, double temperature,
                             ag::Matrix* weights = nullptr);

// softmax([1, 2, ..., n]): positional importance of words within a session
// and of sessions within a history.
ag::Matrix positional_weights(int n);

// h_w = F(sum_m s(m) v_{w_m}) with s = positional_weights(t). Empty input
// gives the zero vector.
ag::Var session_word_repr(std::span<const int> words, const ag::Var& word_table,
                          const ag::Var& output_map);

// r_w^h = sum_j s(j) h_w^j with s = positional_weights(T - 1); zero for T = 1.
ag::Var historical_word_repr(std::span<const ag::Var> session_reprs, ag::Index dim);

struct GateOutput {
  ag::Var mixed;  // tau * r_w + (1 - tau) * r_e
  ag::Var tau;    // 1 x 1, sigmoid(W_g [r_w, r_e])
};
GateOutput intent_gate(const ag::Var& r_w, const ag::Var& r_e, const ag::Var& gate_weight);

// r_d^h: pool each historical session's items (as entity rows), then
// aggregate against the current intent p_d^c at temperature lambda_i.
// Sessions without items are skipped.
ag::Var historical_item_repr(const std::vector<std::vector<int>>& session_item_entities,
                             const ag::Var& entity_table, const AttentionPoolParameters& pool,
                             const ag::Var& current_intent, const ag::Var& bilinear, double temperature);

}  // namespace uccr
