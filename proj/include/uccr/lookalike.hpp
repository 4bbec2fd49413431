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

// Per-turn snapshot store and the clipped look-alike contribution.

#pragma once

#include <filesystem>
#include <vector>

#include "uccr/autograd.hpp"

namespace uccr {

enum class LookalikeView { kWord, kEntity };

// Frozen representations of one training user at one labeled turn. `*_hist`
// aggregates sessions before `session_index`; `*_cur` pools mentions strictly
// before `turn` of that session. All are 1 x d.
struct SnapshotEntry {
  int user = 0;  // position in Corpus::users
  int session_index = 0;
  int turn = 0;  // 0-based turn position within the session
  ag::Matrix word_hist, word_cur, entity_hist, entity_cur;
};

class SnapshotStore {
 public:
  SnapshotStore() = default;
  SnapshotStore(std::vector<SnapshotEntry> entries, long epoch);

  const std::vector<SnapshotEntry>& entries() const { return entries_; }
  long epoch() const { return epoch_; }
  std::size_t size() const { return entries_.size(); }

  // sum over entries of other users of max(0, cos(query, hist) - delta) * cur.
  // The result is a constant: no gradient reaches the query or the snapshots.
  // Zero query or zero snapshot history contributes nothing. Throws
  // std::logic_error when expected_epoch differs from the store's tag.
  ag::Var contribution(const ag::Var& query, LookalikeView view, double delta, int exclude_user,
                       long expected_epoch) const;

  // Number of entries whose clip weight is positive, for diagnostics.
  std::size_t passing(const ag::Matrix& query, LookalikeView view, double delta, int exclude_user) const;

  // JSON lines; vectors stored as float32 values.
  void dump(const std::filesystem::path& path) const;
  static SnapshotStore restore(const std::filesystem::path& path);

 private:
  std::vector<SnapshotEntry> entries_;
  long epoch_ = -1;
};

}  // namespace uccr
