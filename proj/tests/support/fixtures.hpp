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

#pragma once

#include <filesystem>
#include <string>

#include "uccr/corpus.hpp"

namespace uccr::testing {

inline constexpr const char* kMinimalCorpusJson =
    R"({"entities":["m1","genre"],"relations":["has"],"triples":[["m1","has","genre"]],)"
    R"("items":["m1"],"words":["scary","dark"],"word_edges":[["scary","dark"]],)"
    R"("users":[{"user_id":"alice","sessions":[{"turns":[)"
    R"({"speaker":"user","tokens":[5,6],"entities":["genre"],"words":["scary"]},)"
    R"({"speaker":"system","tokens":[7],"entities":[],"words":[],"item":"m1"}]}]}]})";

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("uccr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// 3 users, 2 sessions each, 5 items among 6 entities, 6 words.
inline GenConfig tiny_gen_config() {
  GenConfig g;
  g.num_users = 3;
  g.min_sessions = g.max_sessions = 2;
  g.turns_per_session = 4;
  g.num_entities = 6;
  g.num_items = 5;
  g.num_words = 6;
  g.num_relations = 2;
  g.num_clusters = 1;
  g.attributes_per_item = 1;
  g.empty_opening_prob = 0.0;
  return g;
}

}  // namespace uccr::testing
