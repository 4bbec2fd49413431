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

// Interactive demo loop over a recommendation and a dialogue checkpoint.
// Mentions are typed as @entity:NAME and #word:NAME; other words are kept
// in the dialogue context as UNK.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "uccr/dialogue.hpp"
#include "uccr/errors.hpp"
#include "uccr/rec.hpp"

namespace uccr::cli {

namespace {

// Token that best identifies each mention: the one maximizing
// co(m, t)^2 / (count(m) * count(t)) over turns, ties to the smaller id.
struct MentionTokens {
  std::map<int, int> entity, word;
  std::map<int, std::pair<bool, int>> reverse;  // token -> (is_entity, id)
};

MentionTokens learn_mention_tokens(const Corpus& c) {
  std::map<int, double> token_count;
  std::map<std::pair<int, int>, double> co_e, co_w;
  std::map<int, double> ent_count, word_count;
  for (const auto& u : c.users) {
    for (const auto& s : u.sessions) {
      for (const auto& t : s.turns) {
        std::set<int> toks(t.tokens.begin(), t.tokens.end());
        std::set<int> ents(t.entities.begin(), t.entities.end());
        std::set<int> words(t.words.begin(), t.words.end());
        for (int tok : toks) token_count[tok] += 1;
        for (int e : ents) {
          ent_count[e] += 1;
          for (int tok : toks) co_e[{e, tok}] += 1;
        }
        for (int w : words) {
          word_count[w] += 1;
          for (int tok : toks) co_w[{w, tok}] += 1;
        }
      }
    }
  }
  MentionTokens m;
  std::map<int, double> best_score;
  auto pick = [&](const std::map<std::pair<int, int>, double>& co, const std::map<int, double>& count,
                  std::map<int, int>& out, bool is_entity) {
    std::map<int, double> score;
    for (const auto& [key, n] : co) {
      const auto [id, tok] = key;
      const double s = n * n / (count.at(id) * token_count.at(tok));
      if (!score.count(id) || s > score[id]) {
        score[id] = s;
        out[id] = tok;
      }
    }
    for (const auto& [id, tok] : out) {
      if (!best_score.count(tok) || score[id] > best_score[tok]) {
        best_score[tok] = score[id];
        m.reverse[tok] = {is_entity, id};
      }
    }
  };
  pick(co_e, ent_count, m.entity, true);
  pick(co_w, word_count, m.word, false);
  return m;
}

std::string render(const Corpus& c, const MentionTokens& mt, const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) {
    if (id == vocab::kEos) break;
    std::string piece;
    if (id < vocab::kFirstCorpusToken) {
      piece = "<special:" + std::to_string(id) + ">";
    } else {
      const int tok = id - vocab::kFirstCorpusToken;
      auto it = mt.reverse.find(tok);
      if (it == mt.reverse.end()) {
        piece = "<" + std::to_string(tok) + ">";
      } else if (it->second.first) {
        piece = "@" + c.kg.entities[it->second.second];
      } else {
        piece = "#" + c.lexical.words[it->second.second];
      }
    }
    out += (out.empty() ? "" : " ") + piece;
  }
  return out;
}

}  // namespace

int cmd_chat(const Common& common, const ChatArgs& args, std::istream& in, std::ostream& out) {
  Run run = open_run(common, "chat");
  Corpus c = load_corpus(or_default(args.corpus, run, "corpus.json"));
  const fs::path split_path = or_default(args.split, run, "split.json");
  Split split;
  if (fs::exists(split_path)) {
    split = load_split(split_path, c);
  } else {
    split = chronological_split(c, {}, 0, 1);
  }
  const MentionTokens mentions = learn_mention_tokens(c);

  // The live session is appended to the chosen user's record (or to a new
  // user without history) before the models bind to the corpus.
  int user = -1;
  if (args.user) {
    user = c.user_position(*args.user);
    if (user < 0) throw DataError("unknown user '" + *args.user + "'");
  } else {
    c.users.push_back({"chat-user", {}});
    user = static_cast<int>(c.users.size()) - 1;
  }
  Session live;
  live.session_index = c.users[user].sessions.empty() ? 1 : c.users[user].sessions.back().session_index + 1;
  c.users[user].sessions.push_back(live);
  const int session = static_cast<int>(c.users[user].sessions.size()) - 1;

  UccrModel rec = load_checkpoint(or_default(args.rec_checkpoint, run, "rec.ckpt"), c);
  DialogueModel dial = load_dialogue_checkpoint(or_default(args.dial_checkpoint, run, "dial.ckpt"));
  if (dial.config().user_dim > 0 && dial.config().user_dim != rec.config().dim) {
    throw DataError("dialogue bias map width does not match the recommendation model");
  }
  const ContextOptions opts{rec.config().include_system_mentions};
  auto train = extract_instances(c, split, Part::kTrain, opts);
  std::erase_if(train, [&](const RecInstance& r) { return r.user == user && r.session == session; });

  std::ofstream transcript(run.dir / "chat_transcript.txt", std::ios::binary);
  auto emit = [&](const std::string& line) {
    out << line << "\n";
    transcript << line << "\n";
  };
  std::vector<int> context;
  std::string line;
  out << "type a message; @entity:NAME and #word:NAME mark mentions; 'quit' ends\n";
  while (true) {
    out << "> " << std::flush;
    if (!std::getline(in, line)) break;
    if (line == "quit") break;
    Turn turn;
    turn.speaker = Speaker::kUser;
    std::vector<int> ids;
    std::istringstream words(line);
    std::string w;
    while (words >> w) {
      if (w.rfind("@entity:", 0) == 0 || w.rfind("#word:", 0) == 0) {
        const bool is_entity = w[0] == '@';
        const std::string name = w.substr(is_entity ? 8 : 6);
        const auto& table = is_entity ? c.kg.entities : c.lexical.words;
        auto it = std::find(table.begin(), table.end(), name);
        if (it == table.end()) {
          std::cerr << "warning: unresolved mention '" << w << "'\n";
          ids.push_back(vocab::kUnk);
          continue;
        }
        const int id = static_cast<int>(it - table.begin());
        (is_entity ? turn.entities : turn.words).push_back(id);
        const auto& tokmap = is_entity ? mentions.entity : mentions.word;
        auto tk = tokmap.find(id);
        if (tk != tokmap.end()) {
          turn.tokens.push_back(tk->second);
          ids.push_back(vocab::from_corpus(tk->second));
        } else {
          ids.push_back(vocab::kUnk);
        }
      } else {
        ids.push_back(vocab::kUnk);
      }
    }
    emit("user: " + line);
    Session& s = c.users[user].sessions[session];
    s.turns.push_back(turn);
    if (!context.empty()) context.push_back(vocab::kSep);
    context.insert(context.end(), ids.begin(), ids.end());

    RecInstance inst;
    inst.user = user;
    inst.session = session;
    inst.session_index = s.session_index;
    inst.turn = static_cast<int>(s.turns.size());
    session_prefix(s, inst.turn, opts, inst.context_entities, inst.context_words);
    const std::vector<RecInstance> query = {inst};
    rec.rebuild_snapshots(train, query);
    ag::Matrix r_u;
    ag::Matrix probs;
    {
      ag::NoGradGuard guard;
      UccrModel::Batch batch(rec);
      UserState st = rec.forward(inst, batch);
      r_u = st.r.value();
      probs = ag::softmax_rows(st.logits).value();
    }
    std::vector<int> order(static_cast<std::size_t>(probs.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return probs(0, a) > probs(0, b); });
    order.resize(std::min<std::size_t>(order.size(), 10));

    const ag::Matrix bias = dial.config().user_dim > 0 ? r_u : ag::Matrix();
    std::vector<int> reply = dial.generate(context, bias, run.config.generate);
    emit("system: " + render(c, mentions, reply));
    std::string top = "top-10:";
    for (int item : order) top += " " + c.kg.entities[c.kg.items[item]];
    emit(top);

    Turn sys;
    sys.speaker = Speaker::kSystem;
    for (int id : reply) {
      if (id == vocab::kEos) break;
      if (id < vocab::kFirstCorpusToken) continue;
      const int tok = id - vocab::kFirstCorpusToken;
      sys.tokens.push_back(tok);
      auto it = mentions.reverse.find(tok);
      if (it != mentions.reverse.end()) (it->second.first ? sys.entities : sys.words).push_back(it->second.second);
    }
    s.turns.push_back(sys);
    context.push_back(vocab::kSep);
    for (int id : reply) {
      if (id == vocab::kEos) break;
      context.push_back(id);
    }
  }
  transcript.flush();
  if (!transcript) throw DataError("cannot write the chat transcript");
  out << "transcript -> " << (run.dir / "chat_transcript.txt").string() << "\n";
  return 0;
}

}  // namespace uccr::cli
