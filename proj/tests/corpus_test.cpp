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

#include "uccr/corpus.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "support/fixtures.hpp"
#include "uccr/errors.hpp"

namespace uccr {
namespace {

TEST(CorpusLoad, MinimalFileYieldsOneInstance) {
  auto dir = testing::scratch_dir("corpus_min");
  std::ofstream(dir / "c.json") << testing::kMinimalCorpusJson;
  Corpus c = load_corpus(dir / "c.json");
  ASSERT_EQ(c.users.size(), 1u);
  Split split = chronological_split(c, {}, 0, 0);
  auto inst = extract_instances(c, split, Part::kTrain);
  ASSERT_EQ(inst.size(), 1u);
  EXPECT_EQ(inst[0].label_item, 0);
  EXPECT_EQ(inst[0].context_entities, std::vector<int>({1}));
}

TEST(CorpusLoad, DanglingEntityNamesTheRecord) {
  std::string text = testing::kMinimalCorpusJson;
  const std::string from = "\"entities\":[\"genre\"]";
  text.replace(text.find(from), from.size(), "\"entities\":[\"nope\"]");
  try {
    corpus_from_json(text);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("user 'alice', session 1, turn 1"), std::string::npos)
        << e.what();
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
  }
}

TEST(CorpusLoad, RejectsInvariantViolations) {
  auto mutate = [](const std::string& from, const std::string& to) {
    std::string text = testing::kMinimalCorpusJson;
    auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    text.replace(pos, from.size(), to);
    return text;
  };
  // Item that is not an entity.
  EXPECT_THROW(corpus_from_json(mutate("\"items\":[\"m1\"]", "\"items\":[\"zz\"]")), DataError);
  // Duplicate triple.
  EXPECT_THROW(corpus_from_json(mutate("[[\"m1\",\"has\",\"genre\"]]",
                                       "[[\"m1\",\"has\",\"genre\"],[\"m1\",\"has\",\"genre\"]]")),
               DataError);
  // Lexical self-loop.
  EXPECT_THROW(corpus_from_json(mutate("[[\"scary\",\"dark\"]]", "[[\"scary\",\"scary\"]]")), DataError);
  // Empty session.
  EXPECT_THROW(corpus_from_json(
                   R"({"entities":[],"relations":[],"triples":[],"items":[],"words":[],"word_edges":[],
                       "users":[{"user_id":"a","sessions":[{"turns":[]}]}]})"),
               DataError);
  // Label that is an entity but not an item.
  EXPECT_THROW(corpus_from_json(mutate("\"item\":\"m1\"", "\"item\":\"genre\"")), DataError);
  EXPECT_THROW(load_corpus("/nonexistent/corpus.json"), DataError);
}

TEST(CorpusLoad, SaveLoadRoundTripIsByteIdentical) {
  auto dir = testing::scratch_dir("corpus_roundtrip");
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GenConfig g;
    g.num_users = 4 + static_cast<int>(seed);
    g.min_sessions = 1;
    g.max_sessions = 4;
    save_corpus(synthesize_corpus(g, seed), dir / "a.json");
    save_corpus(load_corpus(dir / "a.json"), dir / "b.json");
    std::ifstream a(dir / "a.json"), b(dir / "b.json");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    EXPECT_EQ(sa.str(), sb.str()) << "seed " << seed;
  }
}

TEST(CorpusLoad, JsonLinesAndTsvGraphs) {
  auto dir = testing::scratch_dir("corpus_jsonl");
  std::ofstream(dir / "c.jsonl")
      << R"({"entities":["m1","genre"],"relations":["has"],"items":["m1"],"words":["scary","dark"]})"
      << "\n"
      << R"({"triples":[["m1","has","genre"]],"word_edges":[["scary","dark"]]})" << "\n"
      << R"({"user_id":"bob","sessions":[{"turns":[{"speaker":"user","tokens":[5],"entities":["genre"],"words":["dark"]},{"speaker":"system","tokens":[6],"entities":[],"words":[],"item":"m1"}]}]})"
      << "\n";
  Corpus c = load_corpus(dir / "c.jsonl");
  EXPECT_EQ(c.users.size(), 1u);
  EXPECT_EQ(c.kg.triples.size(), 1u);
  EXPECT_EQ(c.label_count(), 1u);

  std::ofstream(dir / "t.tsv") << "m1\thas\tgenre\n# comment\n\nm2\thas\tgenre\n";
  std::ofstream(dir / "e.tsv") << "scary\tdark\n";
  auto triples = read_triples_tsv(dir / "t.tsv");
  ASSERT_EQ(triples.size(), 2u);
  EXPECT_EQ(triples[1][0], "m2");
  EXPECT_EQ(read_word_edges_tsv(dir / "e.tsv").size(), 1u);
  std::ofstream(dir / "bad.tsv") << "m1\thas\n";
  EXPECT_THROW(read_triples_tsv(dir / "bad.tsv"), DataError);
}

Corpus sessions_corpus(int n_sessions) {
  GenConfig g;
  g.num_users = 3;
  g.min_sessions = n_sessions;
  g.max_sessions = n_sessions;
  return synthesize_corpus(g, 11);
}

TEST(ChronologicalSplit, TenSessionsGiveEightOneOne) {
  Corpus c = sessions_corpus(10);
  Split s = chronological_split(c, {"u0"}, 1, 1);
  const auto& us = s.users.at("u0");
  EXPECT_EQ(us.train, std::vector<int>({1, 2, 3, 4, 5, 6, 7, 8}));
  EXPECT_EQ(us.val, std::vector<int>({9}));
  EXPECT_EQ(us.test, std::vector<int>({10}));
  EXPECT_FALSE(us.cold_start);
  EXPECT_EQ(s.users.at("u1").train.size(), 10u);
  EXPECT_TRUE(s.users.at("u1").test.empty());
  EXPECT_EQ(s.eval_users, std::vector<std::string>({"u0"}));
}

TEST(ChronologicalSplit, ZeroHoldoutIsIdentity) {
  Corpus c = sessions_corpus(4);
  Split s = chronological_split(c, {"u0", "u2"}, 0, 0);
  for (const auto& [id, us] : s.users) {
    EXPECT_EQ(us.train.size(), 4u);
    EXPECT_TRUE(us.val.empty() && us.test.empty());
  }
}

TEST(ChronologicalSplit, ShortHistoryIsColdStartAndTooShortIsAnError) {
  Corpus c = sessions_corpus(2);
  Split s = chronological_split(c, {"u1"}, 1, 1);
  EXPECT_TRUE(s.users.at("u1").cold_start);
  EXPECT_TRUE(s.users.at("u1").train.empty());
  EXPECT_THROW(chronological_split(c, {"u1"}, 2, 1), DataError);
  EXPECT_THROW(chronological_split(c, {"ghost"}, 1, 1), DataError);
}

TEST(ChronologicalSplit, OrderingHoldsOnRandomCorpora) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GenConfig g;
    g.num_users = 8;
    g.min_sessions = 2;
    g.max_sessions = 7;
    Corpus c = synthesize_corpus(g, seed);
    Split s = chronological_split(c, sample_eval_users(c, 4, seed), 1, 1);
    for (const auto& id : s.eval_users) {
      const auto& us = s.users.at(id);
      // Brute-force comparison of every pair of indices across parts.
      for (int t : us.train) {
        for (int v : us.val) EXPECT_LT(t, v);
        for (int x : us.test) EXPECT_LT(t, x);
      }
      for (int v : us.val) {
        for (int x : us.test) EXPECT_LT(v, x);
      }
    }
  }
}

TEST(ChronologicalSplit, FileRoundTripAndValidation) {
  auto dir = testing::scratch_dir("split_file");
  Corpus c = sessions_corpus(5);
  Split s = chronological_split(c, {"u0", "u2"}, 1, 2);
  save_split(s, dir / "split.json");
  Split back = load_split(dir / "split.json", c);
  EXPECT_EQ(split_to_json(back), split_to_json(s));
  EXPECT_EQ(back.eval_users, s.eval_users);
  std::ofstream(dir / "bad.json") << R"({"u0":{"train":[1,5],"val":[2],"test":[3,4]}})";
  EXPECT_THROW(load_split(dir / "bad.json", c), DataError);
}

TEST(ExtractInstances, ContextIsStrictPrefix) {
  Corpus c = corpus_from_json(testing::kMinimalCorpusJson);
  // Labels at turns 3 and 5 (1-based) of a fresh five-turn session.
  Session s;
  s.session_index = 2;
  for (int t = 0; t < 5; ++t) {
    Turn turn;
    turn.speaker = t % 2 == 0 ? Speaker::kUser : Speaker::kSystem;
    turn.entities = {t % 2};
    turn.words = {t % 2};
    if (t == 2 || t == 4) turn.label_item = 0;
    s.turns.push_back(turn);
  }
  c.users[0].sessions.push_back(s);
  Split split = chronological_split(c, {}, 0, 0);
  auto inst = extract_instances(c, split, Part::kTrain);
  ASSERT_EQ(inst.size(), 3u);
  EXPECT_EQ(inst[1].turn, 2);
  EXPECT_EQ(inst[1].context_entities, std::vector<int>({0, 1}));
  EXPECT_EQ(inst[2].context_entities.size(), 4u);

  ContextOptions user_only{.include_system_mentions = false};
  auto inst2 = extract_instances(c, split, Part::kTrain, user_only);
  EXPECT_EQ(inst2[1].context_entities, std::vector<int>({0}));
}

TEST(ExtractInstances, UnlabeledSessionGivesNothingAndCountsMatch) {
  Corpus c = corpus_from_json(testing::kMinimalCorpusJson);
  c.users[0].sessions[0].turns[1].label_item.reset();
  EXPECT_TRUE(extract_instances(c, chronological_split(c, {}, 0, 0), Part::kTrain).empty());

  GenConfig g;
  g.num_users = 12;
  g.min_sessions = 3;
  g.max_sessions = 6;
  Corpus big = synthesize_corpus(g, 3);
  Split split = chronological_split(big, sample_eval_users(big, 6, 1), 1, 1);
  std::size_t total = 0;
  for (Part p : {Part::kTrain, Part::kVal, Part::kTest}) {
    auto inst = extract_instances(big, split, p);
    std::size_t direct = 0;
    for (const auto& u : big.users) {
      for (const auto& s : u.sessions) {
        if (split.part_of(u.user_id, s.session_index) != p) continue;
        for (const auto& t : s.turns) direct += t.label_item ? 1 : 0;
      }
    }
    EXPECT_EQ(inst.size(), direct) << part_name(p);
    total += inst.size();
  }
  EXPECT_EQ(total, big.label_count());
}

TEST(Synthesize, DeterministicAndValidated) {
  GenConfig g;
  EXPECT_EQ(corpus_to_json(synthesize_corpus(g, 5)), corpus_to_json(synthesize_corpus(g, 5)));
  EXPECT_NE(corpus_to_json(synthesize_corpus(g, 5)), corpus_to_json(synthesize_corpus(g, 6)));
  GenConfig bad = g;
  bad.num_items = bad.num_entities + 1;
  EXPECT_THROW(synthesize_corpus(bad, 0), ConfigError);
  bad = g;
  bad.history_weight = 1.5;
  EXPECT_THROW(synthesize_corpus(bad, 0), ConfigError);
  // Every synthetic corpus passes the loader's validation.
  EXPECT_NO_THROW(corpus_from_json(corpus_to_json(synthesize_corpus(g, 9))));
}

TEST(Synthesize, ZeroHistoryWeightLabelsFollowTheSessionTopic) {
  GenConfig g;
  g.history_weight = 0.0;
  g.empty_opening_prob = 0.0;
  SynthTruth truth;
  Corpus c = synthesize_corpus(g, 21, &truth);
  const int C = g.num_clusters;
  for (const auto& u : c.users) {
    for (const auto& s : u.sessions) {
      // The session topic is the cluster of the opening user mention.
      const int e = s.turns[0].entities.at(0);
      const int topic = e < g.num_items ? e % C : (e - g.num_items) % C;
      for (const auto& t : s.turns) {
        if (t.label_item) EXPECT_EQ(truth.item_cluster[*t.label_item], topic);
      }
    }
  }
}

TEST(Synthesize, FullHistoryWeightIsPredictableFromHistoricalClusters) {
  GenConfig g;
  g.num_users = 20;
  g.min_sessions = 5;
  g.max_sessions = 5;
  g.history_weight = 1.0;
  SynthTruth truth;
  Corpus c = synthesize_corpus(g, 4, &truth);
  // Oracle: predict the modal cluster of labels in sessions 1..4; score the
  // labels of session 5.
  int hits = 0, total = 0;
  for (const auto& u : c.users) {
    std::map<int, int> freq;
    for (std::size_t s = 0; s + 1 < u.sessions.size(); ++s) {
      for (const auto& t : u.sessions[s].turns) {
        if (t.label_item) ++freq[truth.item_cluster[*t.label_item]];
      }
    }
    const int modal = std::max_element(freq.begin(), freq.end(), [](auto& a, auto& b) {
                        return a.second < b.second;
                      })->first;
    for (const auto& t : u.sessions.back().turns) {
      if (!t.label_item) continue;
      ++total;
      hits += truth.item_cluster[*t.label_item] == modal;
    }
  }
  ASSERT_GT(total, 0);
  EXPECT_GE(static_cast<double>(hits) / total, 0.8);
}

}  // namespace
}  // namespace uccr
