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

#include "uccr/metrics.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "uccr/rec.hpp"

namespace uccr {

int rank_of(const ag::Matrix& scores, int label) {
  if (scores.rows() != 1 || label < 0 || label >= scores.cols()) throw std::invalid_argument("rank_of: bad label");
  const double s = scores(0, label);
  int rank = 1;
  for (ag::Index j = 0; j < scores.cols(); ++j) {
    const double v = scores(0, j);
    if (v > s || (v == s && j < label)) ++rank;
  }
  return rank;
}

std::map<std::string, double> metrics_at_rank(int rank, std::span<const int> ks) {
  std::map<std::string, double> out;
  for (int k : ks) {
    const std::string suffix = "@" + std::to_string(k);
    const bool hit = rank <= k;
    out["hr" + suffix] = hit ? 1.0 : 0.0;
    out["mrr" + suffix] = hit ? 1.0 / rank : 0.0;
    out["ndcg" + suffix] = hit ? 1.0 / std::log2(rank + 1.0) : 0.0;
  }
  return out;
}

void MetricAccumulator::add(int rank) {
  for (const auto& [k, v] : metrics_at_rank(rank, ks_)) sums_[k] += v;
  ++count_;
}

std::map<std::string, double> MetricAccumulator::means() const {
  std::map<std::string, double> out;
  if (count_ == 0) return out;
  for (const auto& [k, v] : sums_) out[k] = v / static_cast<double>(count_);
  return out;
}

std::string entity_bucket(const RecInstance& inst) {
  const std::size_t n = std::set<int>(inst.context_entities.begin(), inst.context_entities.end()).size();
  if (n <= 3) return std::to_string(n);
  return n <= 5 ? "4-5" : "6+";
}

RankingReport ranking_report(std::span<const RecInstance> insts, std::span<const int> ranks,
                             const std::vector<bool>& new_users) {
  if (insts.size() != ranks.size()) throw std::invalid_argument("ranking_report: size mismatch");
  MetricAccumulator all;
  std::map<std::string, MetricAccumulator> buckets, cohorts;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    all.add(ranks[i]);
    buckets[entity_bucket(insts[i])].add(ranks[i]);
    const int u = insts[i].user;
    const bool is_new = u < static_cast<int>(new_users.size()) && new_users[u];
    cohorts[is_new ? "new" : "old"].add(ranks[i]);
  }
  RankingReport r;
  r.count = all.count();
  r.overall = all.means();
  auto row = [](const std::string& name, std::map<std::string, MetricAccumulator>& acc) {
    CohortRow out;
    out.name = name;
    auto it = acc.find(name);
    if (it != acc.end() && it->second.count() > 0) {
      out.count = it->second.count();
      out.metrics = it->second.means();
    }
    return out;
  };
  for (const auto& b : entity_bucket_names()) r.entity_buckets.push_back(row(b, buckets));
  for (const char* c : {"new", "old"}) r.user_cohorts.push_back(row(c, cohorts));
  return r;
}

RankingReport evaluate_rec(const UccrModel& model, std::span<const RecInstance> insts,
                           const std::vector<bool>& new_users) {
  const ag::Matrix scores = model.score(insts);
  std::vector<int> ranks;
  ranks.reserve(insts.size());
  for (std::size_t i = 0; i < insts.size(); ++i) {
    ranks.push_back(rank_of(scores.row(static_cast<ag::Index>(i)), insts[i].label_item));
  }
  return ranking_report(insts, ranks, new_users);
}

std::vector<bool> new_user_mask(const Corpus& corpus, const Split& split) {
  std::vector<bool> out(corpus.users.size(), false);
  for (const auto& [id, us] : split.users) {
    const int pos = corpus.user_position(id);
    if (pos >= 0 && us.cold_start) out[pos] = true;
  }
  return out;
}

std::string report_to_json(const RankingReport& report) {
  using nlohmann::json;
  auto rows = [](const std::vector<CohortRow>& rs) {
    json out = json::object();
    for (const auto& r : rs) {
      json m = r.metrics ? json(*r.metrics) : json(nullptr);
      out[r.name] = {{"count", r.count}, {"metrics", m}};
    }
    return out;
  };
  json j{{"count", report.count},
         {"overall", report.overall},
         {"entity_buckets", rows(report.entity_buckets)},
         {"user_cohorts", rows(report.user_cohorts)}};
  return j.dump(2) + "\n";
}

}  // namespace uccr
