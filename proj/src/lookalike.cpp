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

#include "uccr/lookalike.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "uccr/errors.hpp"

namespace uccr {
namespace {

const ag::Matrix& hist_of(const SnapshotEntry& e, LookalikeView v) {
  return v == LookalikeView::kWord ? e.word_hist : e.entity_hist;
}
const ag::Matrix& cur_of(const SnapshotEntry& e, LookalikeView v) {
  return v == LookalikeView::kWord ? e.word_cur : e.entity_cur;
}

template <typename F>
void for_each_weight(const std::vector<SnapshotEntry>& entries, const ag::Matrix& query, LookalikeView view,
                     double delta, int exclude_user, F&& f) {
  const double qn = query.squaredNorm();
  if (qn == 0.0) return;
  for (const auto& e : entries) {
    if (e.user == exclude_user) continue;
    const ag::Matrix& h = hist_of(e, view);
    const double hn = h.squaredNorm();
    if (hn == 0.0) continue;
    const double sim = query.row(0).dot(h.row(0)) / std::sqrt(qn * hn);
    const double w = sim - delta;
    if (w > 0.0) f(w, e);
  }
}

nlohmann::json to_json_row(const ag::Matrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (ag::Index j = 0; j < m.cols(); ++j) out.push_back(static_cast<float>(m(0, j)));
  return out;
}

ag::Matrix from_json_row(const nlohmann::json& j) {
  ag::Matrix m(1, static_cast<ag::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) m(0, static_cast<ag::Index>(k)) = j[k].get<float>();
  return m;
}

}  // namespace

SnapshotStore::SnapshotStore(std::vector<SnapshotEntry> entries, long epoch)
    : entries_(std::move(entries)), epoch_(epoch) {}

ag::Var SnapshotStore::contribution(const ag::Var& query, LookalikeView view, double delta, int exclude_user,
                                    long expected_epoch) const {
  if (expected_epoch != epoch_) {
    throw std::logic_error("snapshot store is stale: built at epoch " + std::to_string(epoch_) +
                           ", requested " + std::to_string(expected_epoch));
  }
  ag::Matrix acc = ag::Matrix::Zero(1, query.cols());
  for_each_weight(entries_, query.value(), view, delta, exclude_user,
                  [&](double w, const SnapshotEntry& e) { acc += w * cur_of(e, view); });
  return ag::constant(std::move(acc));
}

std::size_t SnapshotStore::passing(const ag::Matrix& query, LookalikeView view, double delta,
                                   int exclude_user) const {
  std::size_t n = 0;
  for_each_weight(entries_, query, view, delta, exclude_user, [&](double, const SnapshotEntry&) { ++n; });
  return n;
}

void SnapshotStore::dump(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write snapshot store " + path.string());
  out << nlohmann::json{{"epoch", epoch_}}.dump() << '\n';
  for (const auto& e : entries_) {
    nlohmann::json j{{"user", e.user},
                     {"session", e.session_index},
                     {"turn", e.turn},
                     {"word_hist", to_json_row(e.word_hist)},
                     {"word_cur", to_json_row(e.word_cur)},
                     {"entity_hist", to_json_row(e.entity_hist)},
                     {"entity_cur", to_json_row(e.entity_cur)}};
    out << j.dump() << '\n';
  }
}

SnapshotStore SnapshotStore::restore(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read snapshot store " + path.string());
  std::string line;
  long epoch = -1;
  std::vector<SnapshotEntry> entries;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (line_no == 1) {
        epoch = j.at("epoch").get<long>();
        continue;
      }
      SnapshotEntry e;
      e.user = j.at("user").get<int>();
      e.session_index = j.at("session").get<int>();
      e.turn = j.at("turn").get<int>();
      e.word_hist = from_json_row(j.at("word_hist"));
      e.word_cur = from_json_row(j.at("word_cur"));
      e.entity_hist = from_json_row(j.at("entity_hist"));
      e.entity_cur = from_json_row(j.at("entity_cur"));
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return SnapshotStore(std::move(entries), epoch);
}

}  // namespace uccr
