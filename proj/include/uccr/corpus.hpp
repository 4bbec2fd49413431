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

// Multi-session dialogue corpus: data model, file formats, chronological
// splitting, recommendation-instance extraction, and a synthetic generator.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace uccr {

using Rng = std::mt19937_64;

enum class Speaker { kUser, kSystem };

// All ids below are dense indices resolved by the loader. Entity, word and
// item indices point into the KnowledgeGraph / LexicalGraph tables.
struct Turn {
  Speaker speaker = Speaker::kUser;
  std::vector<int> tokens;
  std::vector<int> entities;
  std::vector<int> words;
  // Index into KnowledgeGraph::items; present iff this is a recommendation turn.
  std::optional<int> label_item;
};

struct Session {
  int session_index = 0;  // 1-based chronological ordinal within the user
  std::vector<Turn> turns;
};

struct UserRecord {
  std::string user_id;
  std::vector<Session> sessions;
};

struct Triple {
  int head = 0;
  int relation = 0;
  int tail = 0;
  auto operator<=>(const Triple&) const = default;
};

struct KnowledgeGraph {
  std::vector<std::string> entities;
  std::vector<std::string> relations;
  std::vector<Triple> triples;
  // items[i] is the entity index of item i.
  std::vector<int> items;

  int num_entities() const { return static_cast<int>(entities.size()); }
  int num_items() const { return static_cast<int>(items.size()); }
};

struct LexicalGraph {
  std::vector<std::string> words;
  std::vector<std::pair<int, int>> edges;  // undirected, stored once

  int num_words() const { return static_cast<int>(words.size()); }
};

struct Corpus {
  KnowledgeGraph kg;
  LexicalGraph lexical;
  std::vector<UserRecord> users;

  // Largest token id seen plus one (0 when the corpus has no tokens).
  int token_space() const;
  int user_position(const std::string& user_id) const;
  std::size_t label_count() const;
};

// Raw string-id document as it appears on disk; validated by build_corpus.
struct RawTurn {
  std::string speaker;
  std::vector<int> tokens;
  std::vector<std::string> entities;
  std::vector<std::string> words;
  std::optional<std::string> item;
};
struct RawSession {
  std::optional<int> index;
  std::vector<RawTurn> turns;
};
struct RawUser {
  std::string user_id;
  std::vector<RawSession> sessions;
};
struct RawCorpus {
  std::vector<std::string> entities;
  std::vector<std::string> relations;
  std::vector<std::array<std::string, 3>> triples;
  std::vector<std::string> items;
  std::vector<std::string> words;
  std::vector<std::array<std::string, 2>> word_edges;
  std::vector<RawUser> users;
};

// Validates every TYPE invariant and resolves ids. Throws DataError naming
// the offending record.
Corpus build_corpus(const RawCorpus& raw);
RawCorpus to_raw(const Corpus& corpus);

// Single JSON document or JSON lines (one user per line, graph keys on any
// other line).
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string corpus_to_json(const Corpus& corpus);
Corpus corpus_from_json(const std::string& text);

// Tab-separated alternatives for the graph parts.
std::vector<std::array<std::string, 3>> read_triples_tsv(const std::filesystem::path& path);
std::vector<std::array<std::string, 2>> read_word_edges_tsv(const std::filesystem::path& path);

enum class Part { kTrain, kVal, kTest };
const char* part_name(Part p);

struct UserSplit {
  std::vector<int> train;  // session_index values
  std::vector<int> val;
  std::vector<int> test;
  // Eval user without any training session.
  bool cold_start = false;
};

struct Split {
  std::map<std::string, UserSplit> users;
  std::vector<std::string> eval_users;

  std::optional<Part> part_of(const std::string& user_id, int session_index) const;
};

// Last n_test sessions of every eval user go to test, the n_val before them to
// val, the rest to train. Non-eval users are entirely train. An eval user
// with exactly n_val + n_test sessions keeps an empty train part and is
// flagged cold-start; fewer sessions is a DataError.
Split chronological_split(const Corpus& corpus, const std::vector<std::string>& eval_users,
                          int n_val, int n_test);
std::vector<std::string> sample_eval_users(const Corpus& corpus, int count, std::uint64_t seed);

void save_split(const Split& split, const std::filesystem::path& path);
Split load_split(const std::filesystem::path& path, const Corpus& corpus);
std::string split_to_json(const Split& split);

struct RecInstance {
  int user = 0;             // position in Corpus::users
  int session = 0;          // position in UserRecord::sessions
  int session_index = 0;    // chronological ordinal
  int turn = 0;             // position in Session::turns
  std::vector<int> context_entities;
  std::vector<int> context_words;
  int label_item = 0;
};

struct ContextOptions {
  // Whether system-side mentions count toward the current context.
  bool include_system_mentions = true;
};

// Mentions of turns [0, turn) in one session.
void session_prefix(const Session& s, int turn, const ContextOptions& opts,
                    std::vector<int>& entities, std::vector<int>& words);

std::vector<RecInstance> extract_instances(const Corpus& corpus, const Split& split, Part part,
                                           const ContextOptions& opts = {});

struct GenConfig {
  int num_users = 20;
  int min_sessions = 5;
  int max_sessions = 5;
  int turns_per_session = 6;  // alternating user / system, user first
  int num_entities = 90;
  int num_items = 30;
  int num_words = 60;
  int num_relations = 2;
  int num_clusters = 5;
  int attributes_per_item = 2;
  int filler_tokens = 8;
  // Probability that a recommendation label comes from the user's latent
  // cluster rather than the current session topic.
  double history_weight = 0.5;
  // Probability that a session topic equals the user's latent cluster.
  double topic_affinity = 0.0;
  // Probability that a system turn carries a label; every session gets at
  // least one.
  double label_prob = 0.5;
  // Probability that the user turn before a topic label mentions the label
  // item's attributes.
  double cue_prob = 0.8;
  // Probability that a history-driven label is the user's favorite item of
  // its latent cluster instead of a uniform draw from that cluster.
  double favorite_prob = 0.8;
  // Probability that a user's favorite item of a cluster is that cluster's
  // population-wide favorite rather than a private draw.
  double shared_favorite_prob = 0.0;
  // Probability that a user-turn word comes from the user's latent cluster
  // instead of the session topic.
  double home_word_prob = 0.0;
  // Probability that the opening user turn mentions no entity.
  double empty_opening_prob = 0.3;
};

struct SynthTruth {
  std::vector<int> user_cluster;
  std::vector<int> item_cluster;
};

// Pure function of (config, seed). Throws ConfigError on inconsistent sizes.
Corpus synthesize_corpus(const GenConfig& config, std::uint64_t seed, SynthTruth* truth = nullptr);

}  // namespace uccr
