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

// Deliberately naive reference implementations used as test oracles.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "uccr/autograd.hpp"

namespace uccr::testing {

inline double naive_cos(const ag::Matrix& a, const ag::Matrix& b) {
  double dot = 0, na = 0, nb = 0;
  for (ag::Index j = 0; j < a.cols(); ++j) {
    dot += a(0, j) * b(0, j);
    na += a(0, j) * a(0, j);
    nb += b(0, j) * b(0, j);
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Rows are users. Users with a zero vector on either side are skipped.
inline double naive_alignment_loss(const ag::Matrix& v1, const ag::Matrix& v2, double lambda_a) {
  double pos = 0, neg = 0;
  for (ag::Index u = 0; u < v1.rows(); ++u) {
    if (v1.row(u).norm() < 1e-8 || v2.row(u).norm() < 1e-8) continue;
    const double c = naive_cos(v1.row(u), v2.row(u));
    pos += (1 - c) * (1 - c);
    for (ag::Index w = 0; w < v1.rows(); ++w) {
      if (w == u || v1.row(w).norm() < 1e-8 || v2.row(w).norm() < 1e-8) continue;
      const double x = naive_cos(v1.row(u), v2.row(w));
      neg += x * x;
    }
  }
  return pos + lambda_a * neg;
}

// Full sort by (score desc, index asc), then read off the label position.
inline std::map<std::string, double> brute_force_metrics(const std::vector<double>& scores, int label) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  int rank = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] == label) rank = static_cast<int>(i) + 1;
  }
  std::map<std::string, double> out;
  for (int k : {10, 50}) {
    const std::string s = "@" + std::to_string(k);
    double hr = 0, mrr = 0, ndcg = 0;
    for (int pos = 1; pos <= std::min<int>(k, static_cast<int>(order.size())); ++pos) {
      if (order[pos - 1] != label) continue;
      hr = 1.0;
      mrr = 1.0 / pos;
      ndcg = 1.0 / std::log2(pos + 1.0);
    }
    out["hr" + s] = hr;
    out["mrr" + s] = mrr;
    out["ndcg" + s] = ndcg;
  }
  out["rank"] = rank;
  return out;
}

}  // namespace uccr::testing
