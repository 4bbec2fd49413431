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

// Ranking metrics and the evaluation report.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uccr/autograd.hpp"
#include "uccr/corpus.hpp"

namespace uccr {

class UccrModel;

// 1-based rank of `label` in a score row: items scoring higher come first,
// equal scores are ordered by item index.
int rank_of(const ag::Matrix& scores, int label);

// Keys hr@k, mrr@k, ndcg@k for every k in `ks`.
std::map<std::string, double> metrics_at_rank(int rank, std::span<const int> ks);

inline const std::vector<int>& default_cutoffs() {
  static const std::vector<int> ks = {10, 50};
  return ks;
}

class MetricAccumulator {
 public:
  explicit MetricAccumulator(std::vector<int> ks = default_cutoffs()) : ks_(std::move(ks)) {}
  void add(int rank);
  std::size_t count() const { return count_; }
  // Means per key; empty when nothing was added.
  std::map<std::string, double> means() const;

 private:
  std::vector<int> ks_;
  std::map<std::string, double> sums_;
  std::size_t count_ = 0;
};

// "0", "1", "2", "3", "4-5", "6+" by number of distinct context entities.
std::string entity_bucket(const RecInstance& inst);
inline const std::vector<std::string>& entity_bucket_names() {
  static const std::vector<std::string> names = {"0", "1", "2", "3", "4-5", "6+"};
  return names;
}

struct CohortRow {
  std::string name;
  std::size_t count = 0;
  std::optional<std::map<std::string, double>> metrics;  // nullopt when empty
};

struct RankingReport {
  std::size_t count = 0;
  std::map<std::string, double> overall;
  std::vector<CohortRow> entity_buckets;
  std::vector<CohortRow> user_cohorts;  // "new", "old"
};

// new_users[u] marks users without any training session. Empty means all
// users are old.
RankingReport ranking_report(std::span<const RecInstance> insts, std::span<const int> ranks,
                             const std::vector<bool>& new_users);

// Scores every instance with the model (snapshots must be current).
RankingReport evaluate_rec(const UccrModel& model, std::span<const RecInstance> insts,
                           const std::vector<bool>& new_users = {});

std::vector<bool> new_user_mask(const Corpus& corpus, const Split& split);

// Stable, sorted-key JSON document.
std::string report_to_json(const RankingReport& report);

}  // namespace uccr
