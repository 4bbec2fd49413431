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

// Cross-view alignment loss tying two views of the same user together.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "uccr/autograd.hpp"

namespace uccr {

// Vectors with norm below this are left out of every similarity term.
inline constexpr double kMinAlignNorm = 1e-8;

// Paired views for the users of one batch; v1[u] and v2[u] belong to user u.
struct AlignmentBatch {
  std::vector<ag::Var> v1;
  std::vector<ag::Var> v2;
};

// L_a = sum_u (1 - cos(v1_u, v2_u))^2 + lambda_a * sum_{u != u'} cos(v1_u, v2_u')^2
// over users whose two vectors both have norm >= kMinAlignNorm. Returns a
// 1 x 1 zero when no user qualifies. Throws std::invalid_argument on size or
// dimension mismatch, or lambda_a < 0.
ag::Var alignment_loss(const AlignmentBatch& batch, double lambda_a);

// Same loss from plain matrices (rows are users); no graph.
double alignment_loss_value(const ag::Matrix& v1, const ag::Matrix& v2, double lambda_a);

// Names of the three alignment tasks, in order.
inline const std::vector<std::string>& alignment_task_names() {
  static const std::vector<std::string> names = {"current_word_entity", "historical_word_entity",
                                                 "historical_item_intent"};
  return names;
}

}  // namespace uccr
