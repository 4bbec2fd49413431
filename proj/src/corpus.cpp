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

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "uccr/errors.hpp"

namespace uccr {

using nlohmann::json;

namespace {

std::unordered_map<std::string, int> index_names(const std::vector<std::string>& names,
                                                 const char* what) {
  std::unordered_map<std::string, int> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!out.emplace(names[i], static_cast<int>(i)).second) {
      throw DataError(std::string("duplicate ") + what + " id '" + names[i] + "'");
    }
  }
  return out;
}

std::string where(const std::string& user, std::size_t session, std::size_t turn) {
  std::ostringstream os;
  os << "user '" << user << "', session " << session + 1 << ", turn " << turn + 1;
  return os.str();
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) throw DataError(ctx + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(ctx + ": bad value for '" + key + "': " + e.what());
  }
}

RawTurn parse_turn(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw DataError(ctx + ": turn must be an object");
  RawTurn t;
  t.speaker = get_field<std::string>(j, "speaker", ctx);
  t.tokens = j.contains("tokens") ? get_field<std::vector<int>>(j, "tokens", ctx) : std::vector<int>{};
  t.entities = j.contains("entities") ? get_field<std::vector<std::string>>(j, "entities", ctx)
                                      : std::vector<std::string>{};
  t.words = j.contains("words") ? get_field<std::vector<std::string>>(j, "words", ctx)
                                : std::vector<std::string>{};
  if (j.contains("item") && !j.at("item").is_null()) t.item = get_field<std::string>(j, "item", ctx);
  return t;
}

RawUser parse_user(const json& j) {
  if (!j.is_object()) throw DataError("user record must be an object");
  RawUser u;
  u.user_id = get_field<std::string>(j, "user_id", "user record");
  const std::string ctx = "user '" + u.user_id + "'";
  if (!j.contains("sessions") || !j.at("sessions").is_array()) {
    throw DataError(ctx + ": missing 'sessions' array");
  }
  std::size_t si = 0;
  for (const auto& js : j.at("sessions")) {
    const std::string sctx = ctx + ", session " + std::to_string(si + 1);
    RawSession s;
    if (js.contains("index")) s.index = get_field<int>(js, "index", sctx);
    if (!js.contains("turns") || !js.at("turns").is_array()) {
      throw DataError(sctx + ": missing 'turns' array");
    }
    std::size_t ti = 0;
    for (const auto& jt : js.at("turns")) {
      s.turns.push_back(parse_turn(jt, where(u.user_id, si, ti)));
      ++ti;
    }
    u.sessions.push_back(std::move(s));
    ++si;
  }
  return u;
}

void merge_graph_keys(const json& j, RawCorpus& raw) {
  const std::string ctx = "corpus";
  if (j.contains("entities")) raw.entities = get_field<std::vector<std::string>>(j, "entities", ctx);
  if (j.contains("relations")) raw.relations = get_field<std::vector<std::string>>(j, "relations", ctx);
  if (j.contains("triples")) {
    raw.triples = get_field<std::vector<std::array<std::string, 3>>>(j, "triples", ctx);
  }
  if (j.contains("items")) raw.items = get_field<std::vector<std::string>>(j, "items", ctx);
  if (j.contains("words")) raw.words = get_field<std::vector<std::string>>(j, "words", ctx);
  if (j.contains("word_edges")) {
    raw.word_edges = get_field<std::vector<std::array<std::string, 2>>>(j, "word_edges", ctx);
  }
  if (j.contains("users")) {
    if (!j.at("users").is_array()) throw DataError("corpus: 'users' must be an array");
    for (const auto& ju : j.at("users")) raw.users.push_back(parse_user(ju));
  }
}

json to_json(const RawCorpus& raw) {
  json j;
  j["entities"] = raw.entities;
  j["relations"] = raw.relations;
  j["triples"] = raw.triples;
  j["items"] = raw.items;
  j["words"] = raw.words;
  j["word_edges"] = raw.word_edges;
  json users = json::array();
  for (const auto& u : raw.users) {
    json ju;
    ju["user_id"] = u.user_id;
    json sessions = json::array();
    for (const auto& s : u.sessions) {
      json js;
      if (s.index) js["index"] = *s.index;
      json turns = json::array();
      for (const auto& t : s.turns) {
        json jt;
        jt["speaker"] = t.speaker;
        jt["tokens"] = t.tokens;
        jt["entities"] = t.entities;
        jt["words"] = t.words;
        if (t.item) jt["item"] = *t.item;
        turns.push_back(std::move(jt));
      }
      js["turns"] = std::move(turns);
      sessions.push_back(std::move(js));
    }
    ju["sessions"] = std::move(sessions);
    users.push_back(std::move(ju));
  }
  j["users"] = std::move(users);
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& path, std::size_t cols) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != cols) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(cols) + " tab-separated columns");
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

int Corpus::token_space() const {
  int best = -1;
  for (const auto& u : users) {
    for (const auto& s : u.sessions) {
      for (const auto& t : s.turns) {
        for (int tok : t.tokens) best = std::max(best, tok);
      }
    }
  }
  return best + 1;
}

int Corpus::user_position(const std::string& user_id) const {
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (users[i].user_id == user_id) return static_cast<int>(i);
  }
  return -1;
}

std::size_t Corpus::label_count() const {
  std::size_t n = 0;
  for (const auto& u : users) {
    for (const auto& s : u.sessions) {
      for (const auto& t : s.turns) n += t.label_item.has_value() ? 1 : 0;
    }
  }
  return n;
}

Corpus build_corpus(const RawCorpus& raw) {
  Corpus c;
  const auto entity_ix = index_names(raw.entities, "entity");
  const auto relation_ix = index_names(raw.relations, "relation");
  const auto word_ix = index_names(raw.words, "word");
  const auto item_names = index_names(raw.items, "item");
  (void)item_names;
  c.kg.entities = raw.entities;
  c.kg.relations = raw.relations;
  c.lexical.words = raw.words;

  std::unordered_map<int, int> item_of_entity;
  for (const auto& name : raw.items) {
    auto it = entity_ix.find(name);
    if (it == entity_ix.end()) throw DataError("item '" + name + "' is not an entity");
    item_of_entity.emplace(it->second, static_cast<int>(c.kg.items.size()));
    c.kg.items.push_back(it->second);
  }

  std::set<Triple> seen_triples;
  for (std::size_t i = 0; i < raw.triples.size(); ++i) {
    const auto& [h, r, t] = raw.triples[i];
    const std::string ctx = "triple " + std::to_string(i + 1) + " <" + h + ", " + r + ", " + t + ">";
    auto hi = entity_ix.find(h), ti = entity_ix.find(t);
    auto ri = relation_ix.find(r);
    if (hi == entity_ix.end() || ti == entity_ix.end()) throw DataError(ctx + ": unknown entity");
    if (ri == relation_ix.end()) throw DataError(ctx + ": unknown relation");
    Triple tr{hi->second, ri->second, ti->second};
    if (!seen_triples.insert(tr).second) throw DataError(ctx + ": duplicate triple");
    c.kg.triples.push_back(tr);
  }

  std::set<std::pair<int, int>> seen_edges;
  for (std::size_t i = 0; i < raw.word_edges.size(); ++i) {
    const auto& [a, b] = raw.word_edges[i];
    const std::string ctx = "word edge " + std::to_string(i + 1) + " (" + a + ", " + b + ")";
    auto ai = word_ix.find(a), bi = word_ix.find(b);
    if (ai == word_ix.end() || bi == word_ix.end()) throw DataError(ctx + ": unknown word");
    if (ai->second == bi->second) throw DataError(ctx + ": self-loop");
    auto key = std::minmax(ai->second, bi->second);
    if (!seen_edges.insert(key).second) throw DataError(ctx + ": duplicate edge");
    c.lexical.edges.emplace_back(ai->second, bi->second);
  }

  std::set<std::string> seen_users;
  for (const auto& ru : raw.users) {
    if (!seen_users.insert(ru.user_id).second) {
      throw DataError("duplicate user id '" + ru.user_id + "'");
    }
    UserRecord u;
    u.user_id = ru.user_id;
    int last_index = 0;
    for (std::size_t si = 0; si < ru.sessions.size(); ++si) {
      const auto& rs = ru.sessions[si];
      Session s;
      s.session_index = rs.index.value_or(static_cast<int>(si) + 1);
      if (s.session_index <= last_index) {
        throw DataError("user '" + ru.user_id + "', session " + std::to_string(si + 1) +
                        ": session index " + std::to_string(s.session_index) +
                        " is not strictly increasing");
      }
      last_index = s.session_index;
      if (rs.turns.empty()) {
        throw DataError("user '" + ru.user_id + "', session " + std::to_string(si + 1) +
                        ": session has no turns");
      }
      for (std::size_t ti = 0; ti < rs.turns.size(); ++ti) {
        const auto& rt = rs.turns[ti];
        const std::string ctx = where(ru.user_id, si, ti);
        Turn t;
        if (rt.speaker == "user") {
          t.speaker = Speaker::kUser;
        } else if (rt.speaker == "system") {
          t.speaker = Speaker::kSystem;
        } else {
          throw DataError(ctx + ": unknown speaker '" + rt.speaker + "'");
        }
        for (int tok : rt.tokens) {
          if (tok < 0) throw DataError(ctx + ": negative token id");
        }
        t.tokens = rt.tokens;
        for (const auto& e : rt.entities) {
          auto it = entity_ix.find(e);
          if (it == entity_ix.end()) throw DataError(ctx + ": unknown entity '" + e + "'");
          t.entities.push_back(it->second);
        }
        for (const auto& w : rt.words) {
          auto it = word_ix.find(w);
          if (it == word_ix.end()) throw DataError(ctx + ": unknown word '" + w + "'");
          t.words.push_back(it->second);
        }
        if (rt.item) {
          auto it = entity_ix.find(*rt.item);
          auto item = it == entity_ix.end() ? item_of_entity.end() : item_of_entity.find(it->second);
          if (item == item_of_entity.end()) {
            throw DataError(ctx + ": unknown item '" + *rt.item + "'");
          }
          t.label_item = item->second;
        }
        s.turns.push_back(std::move(t));
      }
      u.sessions.push_back(std::move(s));
    }
    c.users.push_back(std::move(u));
  }
  return c;
}

RawCorpus to_raw(const Corpus& c) {
  RawCorpus raw;
  raw.entities = c.kg.entities;
  raw.relations = c.kg.relations;
  for (const auto& t : c.kg.triples) {
    raw.triples.push_back({c.kg.entities[t.head], c.kg.relations[t.relation], c.kg.entities[t.tail]});
  }
  for (int e : c.kg.items) raw.items.push_back(c.kg.entities[e]);
  raw.words = c.lexical.words;
  for (const auto& [a, b] : c.lexical.edges) raw.word_edges.push_back({c.lexical.words[a], c.lexical.words[b]});
  for (const auto& u : c.users) {
    RawUser ru;
    ru.user_id = u.user_id;
    for (const auto& s : u.sessions) {
      RawSession rs;
      rs.index = s.session_index;
      for (const auto& t : s.turns) {
        RawTurn rt;
        rt.speaker = t.speaker == Speaker::kUser ? "user" : "system";
        rt.tokens = t.tokens;
        for (int e : t.entities) rt.entities.push_back(c.kg.entities[e]);
        for (int w : t.words) rt.words.push_back(c.lexical.words[w]);
        if (t.label_item) rt.item = c.kg.entities[c.kg.items[*t.label_item]];
        rs.turns.push_back(std::move(rt));
      }
      ru.sessions.push_back(std::move(rs));
    }
    raw.users.push_back(std::move(ru));
  }
  return raw;
}

std::string corpus_to_json(const Corpus& corpus) { return to_json(to_raw(corpus)).dump() + "\n"; }

Corpus corpus_from_json(const std::string& text) {
  RawCorpus raw;
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (!doc.is_discarded()) {
    if (!doc.is_object()) throw DataError("corpus document must be a JSON object");
    merge_graph_keys(doc, raw);
    return build_corpus(raw);
  }
  // JSON lines.
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw DataError("corpus line " + std::to_string(lineno) + ": not a JSON object");
    }
    if (j.contains("user_id")) {
      raw.users.push_back(parse_user(j));
    } else {
      merge_graph_keys(j, raw);
    }
  }
  return build_corpus(raw);
}

Corpus load_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("corpus file not found: " + path.string());
  return corpus_from_json(read_file(path));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << corpus_to_json(corpus);
}

std::vector<std::array<std::string, 3>> read_triples_tsv(const std::filesystem::path& path) {
  std::vector<std::array<std::string, 3>> out;
  for (auto& row : read_tsv(path, 3)) out.push_back({row[0], row[1], row[2]});
  return out;
}

std::vector<std::array<std::string, 2>> read_word_edges_tsv(const std::filesystem::path& path) {
  std::vector<std::array<std::string, 2>> out;
  for (auto& row : read_tsv(path, 2)) out.push_back({row[0], row[1]});
  return out;
}

const char* part_name(Part p) {
  switch (p) {
    case Part::kTrain:
      return "train";
    case Part::kVal:
      return "val";
    case Part::kTest:
      return "test";
  }
  return "?";
}

std::optional<Part> Split::part_of(const std::string& user_id, int session_index) const {
  auto it = users.find(user_id);
  if (it == users.end()) return std::nullopt;
  const auto has = [session_index](const std::vector<int>& v) {
    return std::find(v.begin(), v.end(), session_index) != v.end();
  };
  if (has(it->second.train)) return Part::kTrain;
  if (has(it->second.val)) return Part::kVal;
  if (has(it->second.test)) return Part::kTest;
  return std::nullopt;
}

Split chronological_split(const Corpus& corpus, const std::vector<std::string>& eval_users,
                          int n_val, int n_test) {
  if (n_val < 0 || n_test < 0) throw ConfigError("n_val and n_test must be nonnegative");
  std::set<std::string> eval(eval_users.begin(), eval_users.end());
  for (const auto& id : eval) {
    if (corpus.user_position(id) < 0) throw DataError("eval user '" + id + "' not in corpus");
  }
  Split split;
  for (const auto& u : corpus.users) {
    UserSplit us;
    const int n = static_cast<int>(u.sessions.size());
    if (eval.count(u.user_id) && n_val + n_test > 0) {
      if (n < n_val + n_test) {
        throw DataError("eval user '" + u.user_id + "' has " + std::to_string(n) +
                        " sessions, needs at least " + std::to_string(n_val + n_test));
      }
      const int n_train = n - n_val - n_test;
      for (int i = 0; i < n; ++i) {
        const int idx = u.sessions[i].session_index;
        if (i < n_train) {
          us.train.push_back(idx);
        } else if (i < n_train + n_val) {
          us.val.push_back(idx);
        } else {
          us.test.push_back(idx);
        }
      }
      us.cold_start = us.train.empty();
      split.eval_users.push_back(u.user_id);
    } else {
      for (const auto& s : u.sessions) us.train.push_back(s.session_index);
    }
    split.users.emplace(u.user_id, std::move(us));
  }
  return split;
}

std::vector<std::string> sample_eval_users(const Corpus& corpus, int count, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& u : corpus.users) ids.push_back(u.user_id);
  Rng rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(std::min<std::size_t>(ids.size(), static_cast<std::size_t>(std::max(count, 0))));
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string split_to_json(const Split& split) {
  json j = json::object();
  for (const auto& [id, us] : split.users) {
    j[id] = {{"train", us.train}, {"val", us.val}, {"test", us.test}};
  }
  return j.dump() + "\n";
}

void save_split(const Split& split, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << split_to_json(split);
}

Split load_split(const std::filesystem::path& path, const Corpus& corpus) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DataError("split file must be a JSON object");
  Split split;
  for (const auto& u : corpus.users) {
    if (!j.contains(u.user_id)) throw DataError("split file misses user '" + u.user_id + "'");
    const auto& ju = j.at(u.user_id);
    const std::string ctx = "split for user '" + u.user_id + "'";
    UserSplit us;
    us.train = get_field<std::vector<int>>(ju, "train", ctx);
    us.val = get_field<std::vector<int>>(ju, "val", ctx);
    us.test = get_field<std::vector<int>>(ju, "test", ctx);
    std::set<int> assigned;
    for (const auto* part : {&us.train, &us.val, &us.test}) {
      for (int idx : *part) {
        if (!assigned.insert(idx).second) throw DataError(ctx + ": session assigned twice");
      }
    }
    std::set<int> present;
    for (const auto& s : u.sessions) present.insert(s.session_index);
    if (assigned != present) throw DataError(ctx + ": sessions do not match the corpus");
    const auto max_of = [](const std::vector<int>& v) {
      return v.empty() ? -1 : *std::max_element(v.begin(), v.end());
    };
    const auto min_of = [](const std::vector<int>& v) {
      return v.empty() ? std::numeric_limits<int>::max() : *std::min_element(v.begin(), v.end());
    };
    if (max_of(us.train) >= min_of(us.val) || max_of(us.train) >= min_of(us.test) ||
        max_of(us.val) >= min_of(us.test)) {
      throw DataError(ctx + ": parts are not chronologically ordered");
    }
    const bool is_eval = !us.val.empty() || !us.test.empty();
    us.cold_start = is_eval && us.train.empty();
    if (is_eval) split.eval_users.push_back(u.user_id);
    split.users.emplace(u.user_id, std::move(us));
  }
  for (const auto& [key, value] : j.items()) {
    if (corpus.user_position(key) < 0) throw DataError("split file names unknown user '" + key + "'");
  }
  return split;
}

void session_prefix(const Session& s, int turn, const ContextOptions& opts,
                    std::vector<int>& entities, std::vector<int>& words) {
  entities.clear();
  words.clear();
  for (int i = 0; i < turn && i < static_cast<int>(s.turns.size()); ++i) {
    const Turn& t = s.turns[i];
    if (t.speaker == Speaker::kSystem && !opts.include_system_mentions) continue;
    entities.insert(entities.end(), t.entities.begin(), t.entities.end());
    words.insert(words.end(), t.words.begin(), t.words.end());
  }
}

std::vector<RecInstance> extract_instances(const Corpus& corpus, const Split& split, Part part,
                                           const ContextOptions& opts) {
  std::vector<RecInstance> out;
  for (std::size_t ui = 0; ui < corpus.users.size(); ++ui) {
    const auto& u = corpus.users[ui];
    for (std::size_t si = 0; si < u.sessions.size(); ++si) {
      const auto& s = u.sessions[si];
      if (split.part_of(u.user_id, s.session_index) != part) continue;
      for (std::size_t ti = 0; ti < s.turns.size(); ++ti) {
        if (!s.turns[ti].label_item) continue;
        RecInstance inst;
        inst.user = static_cast<int>(ui);
        inst.session = static_cast<int>(si);
        inst.session_index = s.session_index;
        inst.turn = static_cast<int>(ti);
        inst.label_item = *s.turns[ti].label_item;
        session_prefix(s, inst.turn, opts, inst.context_entities, inst.context_words);
        out.push_back(std::move(inst));
      }
    }
  }
  return out;
}

namespace {

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

int pick(const std::vector<int>& pool, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
  return pool[d(rng)];
}

}  // namespace

Corpus synthesize_corpus(const GenConfig& g, std::uint64_t seed, SynthTruth* truth) {
  if (g.num_users < 1) throw ConfigError("num_users must be >= 1");
  if (g.min_sessions < 1 || g.max_sessions < g.min_sessions) {
    throw ConfigError("need 1 <= min_sessions <= max_sessions");
  }
  if (g.turns_per_session < 2) throw ConfigError("turns_per_session must be >= 2");
  if (g.num_clusters < 1) throw ConfigError("num_clusters must be >= 1");
  if (g.num_items < g.num_clusters) throw ConfigError("need at least one item per cluster");
  if (g.num_items > g.num_entities) throw ConfigError("num_items exceeds num_entities");
  if (g.num_entities - g.num_items < g.num_clusters) {
    throw ConfigError("need at least one attribute entity per cluster");
  }
  if (g.num_words < g.num_clusters) throw ConfigError("need at least one word per cluster");
  if (g.num_relations < 1) throw ConfigError("num_relations must be >= 1");
  if (g.filler_tokens < 5) throw ConfigError("filler_tokens must be >= 5");
  check_prob(g.history_weight, "history_weight");
  check_prob(g.topic_affinity, "topic_affinity");
  check_prob(g.label_prob, "label_prob");
  check_prob(g.cue_prob, "cue_prob");
  check_prob(g.favorite_prob, "favorite_prob");
  check_prob(g.shared_favorite_prob, "shared_favorite_prob");
  check_prob(g.home_word_prob, "home_word_prob");
  check_prob(g.empty_opening_prob, "empty_opening_prob");

  Rng rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const int C = g.num_clusters;
  const int n_attr = g.num_entities - g.num_items;

  Corpus c;
  for (int i = 0; i < g.num_items; ++i) c.kg.entities.push_back("m" + std::to_string(i));
  for (int j = 0; j < n_attr; ++j) c.kg.entities.push_back("a" + std::to_string(j));
  for (int r = 0; r < g.num_relations; ++r) c.kg.relations.push_back("r" + std::to_string(r));
  for (int w = 0; w < g.num_words; ++w) c.lexical.words.push_back("w" + std::to_string(w));
  c.kg.items.resize(g.num_items);
  std::iota(c.kg.items.begin(), c.kg.items.end(), 0);

  std::vector<std::vector<int>> cluster_items(C), cluster_attrs(C), cluster_words(C);
  for (int i = 0; i < g.num_items; ++i) cluster_items[i % C].push_back(i);
  for (int j = 0; j < n_attr; ++j) cluster_attrs[j % C].push_back(g.num_items + j);
  for (int w = 0; w < g.num_words; ++w) cluster_words[w % C].push_back(w);

  std::vector<std::vector<int>> item_attrs(g.num_items);
  std::uniform_int_distribution<int> rel(0, g.num_relations - 1);
  for (int i = 0; i < g.num_items; ++i) {
    std::vector<int> pool = cluster_attrs[i % C];
    std::shuffle(pool.begin(), pool.end(), rng);
    const int k = std::min<int>(g.attributes_per_item, static_cast<int>(pool.size()));
    for (int a = 0; a < k; ++a) {
      item_attrs[i].push_back(pool[a]);
      c.kg.triples.push_back({i, rel(rng), pool[a]});
    }
  }
  std::set<std::pair<int, int>> edges;
  for (int w = 0; w < g.num_words; ++w) {
    std::vector<int> pool;
    for (int v : cluster_words[w % C]) {
      if (v != w) pool.push_back(v);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t k = 0; k < std::min<std::size_t>(2, pool.size()); ++k) {
      edges.insert(std::minmax(w, pool[k]));
    }
  }
  c.lexical.edges.assign(edges.begin(), edges.end());

  const int word_tok = g.filler_tokens;
  const int entity_tok = g.filler_tokens + g.num_words;
  std::uniform_int_distribution<int> cluster_dist(0, C - 1);
  std::uniform_int_distribution<int> session_count(g.min_sessions, g.max_sessions);
  std::uniform_int_distribution<int> one_or_two(1, 2);

  if (truth) {
    truth->user_cluster.clear();
    truth->item_cluster.resize(g.num_items);
    for (int i = 0; i < g.num_items; ++i) truth->item_cluster[i] = i % C;
  }

  std::vector<int> shared_favorite(C);
  if (g.shared_favorite_prob > 0.0) {
    for (int k = 0; k < C; ++k) shared_favorite[k] = pick(cluster_items[k], rng);
  }

  for (int u = 0; u < g.num_users; ++u) {
    UserRecord rec;
    rec.user_id = "u" + std::to_string(u);
    const int home = cluster_dist(rng);
    if (truth) truth->user_cluster.push_back(home);
    std::vector<int> favorite(C);
    for (int k = 0; k < C; ++k) {
      favorite[k] = pick(cluster_items[k], rng);
      if (g.shared_favorite_prob > 0.0 && coin(rng) < g.shared_favorite_prob) favorite[k] = shared_favorite[k];
    }

    const int n_sessions = session_count(rng);
    for (int s = 0; s < n_sessions; ++s) {
      Session sess;
      sess.session_index = s + 1;
      const int topic = coin(rng) < g.topic_affinity ? home : cluster_dist(rng);

      // Decide labels first so the preceding user turn can cue them.
      std::vector<std::optional<int>> label(g.turns_per_session);
      std::vector<bool> cued(g.turns_per_session, false);
      std::vector<int> system_turns;
      for (int t = 1; t < g.turns_per_session; t += 2) system_turns.push_back(t);
      std::vector<bool> labeled(g.turns_per_session, false);
      bool any = false;
      for (int t : system_turns) {
        labeled[t] = coin(rng) < g.label_prob;
        any = any || labeled[t];
      }
      if (!any) labeled[system_turns.back()] = true;
      for (int t : system_turns) {
        if (!labeled[t]) continue;
        if (coin(rng) < g.history_weight) {
          label[t] = coin(rng) < g.favorite_prob ? favorite[home] : pick(cluster_items[home], rng);
        } else {
          label[t] = pick(cluster_items[topic], rng);
          cued[t] = coin(rng) < g.cue_prob;
        }
      }

      for (int t = 0; t < g.turns_per_session; ++t) {
        Turn turn;
        const bool user_turn = t % 2 == 0;
        turn.speaker = user_turn ? Speaker::kUser : Speaker::kSystem;
        if (user_turn) {
          turn.tokens.push_back(t == 0 ? 0 : 1);
          const bool empty = t == 0 && coin(rng) < g.empty_opening_prob;
          if (!empty) {
            turn.entities.push_back(coin(rng) < 0.3 ? pick(cluster_items[topic], rng)
                                                    : pick(cluster_attrs[topic], rng));
          }
          if (t + 1 < g.turns_per_session && cued[t + 1]) {
            for (int a : item_attrs[*label[t + 1]]) turn.entities.push_back(a);
          }
          const int nw = one_or_two(rng);
          for (int k = 0; k < nw; ++k) {
            const bool home_word = g.home_word_prob > 0.0 && coin(rng) < g.home_word_prob;
            turn.words.push_back(pick(cluster_words[home_word ? home : topic], rng));
          }
        } else {
          if (label[t]) {
            turn.tokens.push_back(2);
            turn.entities.push_back(*label[t]);
            turn.label_item = *label[t];
          } else {
            turn.tokens.push_back(3);
            if (coin(rng) < 0.5) turn.entities.push_back(pick(cluster_attrs[topic], rng));
          }
          turn.words.push_back(pick(cluster_words[topic], rng));
        }
        for (int w : turn.words) turn.tokens.push_back(word_tok + w);
        for (int e : turn.entities) turn.tokens.push_back(entity_tok + e);
        turn.tokens.push_back(4);
        sess.turns.push_back(std::move(turn));
      }
      rec.sessions.push_back(std::move(sess));
    }
    c.users.push_back(std::move(rec));
  }
  return c;
}

}  // namespace uccr
