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

#include "uccr/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include "uccr/errors.hpp"

namespace uccr {

namespace {

using Field = std::variant<int*, double*, bool*, std::uint64_t*>;

struct Binding {
  const char* section;
  const char* key;
  Field field;
};

std::vector<Binding> bindings(RunConfig& c) {
  return {
      {"run", "seed", &c.seed},

      {"corpus", "users", &c.corpus.num_users},
      {"corpus", "min_sessions", &c.corpus.min_sessions},
      {"corpus", "max_sessions", &c.corpus.max_sessions},
      {"corpus", "turns_per_session", &c.corpus.turns_per_session},
      {"corpus", "entities", &c.corpus.num_entities},
      {"corpus", "items", &c.corpus.num_items},
      {"corpus", "words", &c.corpus.num_words},
      {"corpus", "relations", &c.corpus.num_relations},
      {"corpus", "clusters", &c.corpus.num_clusters},
      {"corpus", "attributes_per_item", &c.corpus.attributes_per_item},
      {"corpus", "filler_tokens", &c.corpus.filler_tokens},
      {"corpus", "history_weight", &c.corpus.history_weight},
      {"corpus", "topic_affinity", &c.corpus.topic_affinity},
      {"corpus", "label_prob", &c.corpus.label_prob},
      {"corpus", "cue_prob", &c.corpus.cue_prob},
      {"corpus", "favorite_prob", &c.corpus.favorite_prob},
      {"corpus", "shared_favorite_prob", &c.corpus.shared_favorite_prob},
      {"corpus", "home_word_prob", &c.corpus.home_word_prob},
      {"corpus", "empty_opening_prob", &c.corpus.empty_opening_prob},

      {"split", "eval_users", &c.split.eval_users},
      {"split", "val_sessions", &c.split.val_sessions},
      {"split", "test_sessions", &c.split.test_sessions},

      {"model", "dim", &c.model.dim},
      {"model", "layers", &c.model.layers},
      {"model", "lambda_e", &c.model.lambda_e},
      {"model", "lambda_i", &c.model.lambda_i},
      {"model", "lambda_a", &c.model.lambda_a},
      {"model", "lambda_cl", &c.model.lambda_cl},
      {"model", "tau_e", &c.model.tau_e},
      {"model", "tau_w", &c.model.tau_w},
      {"model", "delta_e", &c.model.delta_e},
      {"model", "delta_w", &c.model.delta_w},
      {"model", "alpha_s", &c.model.alpha_s},
      {"model", "beta_s", &c.model.beta_s},
      {"model", "use_entity", &c.model.use_entity},
      {"model", "use_word", &c.model.use_word},
      {"model", "use_item", &c.model.use_item},
      {"model", "use_history", &c.model.use_history},
      {"model", "use_lookalike", &c.model.use_lookalike},
      {"model", "include_system_mentions", &c.model.include_system_mentions},

      {"train", "learning_rate", &c.train.learning_rate},
      {"train", "batch_size", &c.train.batch_size},
      {"train", "epochs", &c.train.epochs},
      {"train", "mapper_epochs", &c.train.mapper_epochs},

      {"dialogue", "dim", &c.dialogue.dim},
      {"dialogue", "heads", &c.dialogue.heads},
      {"dialogue", "encoder_layers", &c.dialogue.encoder_layers},
      {"dialogue", "decoder_layers", &c.dialogue.decoder_layers},
      {"dialogue", "ff_dim", &c.dialogue.ff_dim},
      {"dialogue", "max_context", &c.dialogue.max_context},
      {"dialogue", "max_response", &c.dialogue.max_response},

      {"dial_train", "learning_rate", &c.dial_train.learning_rate},
      {"dial_train", "batch_size", &c.dial_train.batch_size},
      {"dial_train", "epochs", &c.dial_train.epochs},

      {"generate", "max_length", &c.generate.max_length},
      {"generate", "beam_width", &c.generate.beam_width},
  };
}

std::string where(const std::string& section, const std::string& key) { return section + "." + key; }

template <typename T>
T parse_number(const std::string& text, const std::string& name) {
  T v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("config: cannot parse " + name + " = '" + text + "'");
  return v;
}

void assign(Field field, const std::string& raw, const std::string& name) {
  std::string text = raw;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.erase(text.begin());
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1") {
            *p = true;
          } else if (text == "false" || text == "0") {
            *p = false;
          } else {
            throw ConfigError("config: " + name + " expects true or false, got '" + text + "'");
          }
        } else {
          *p = parse_number<T>(text, name);
        }
      },
      field);
}

std::string format(Field field) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
          return *p ? "true" : "false";
        } else {
          char buf[64];
          auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), *p);
          return std::string(buf, end);
        }
      },
      field);
}

Field* find(std::vector<Binding>& bs, const std::string& section, const std::string& key) {
  for (auto& b : bs) {
    if (section == b.section && key == b.key) return &b.field;
  }
  return nullptr;
}

void validate(const RunConfig& c) {
  c.model.validate();
  c.generate.validate();
  if (c.split.val_sessions < 0 || c.split.test_sessions < 1) {
    throw ConfigError("config: split needs val_sessions >= 0 and test_sessions >= 1");
  }
  if (c.split.eval_users < -1) throw ConfigError("config: split.eval_users must be >= -1");
  if (!(c.train.learning_rate > 0.0) || !(c.dial_train.learning_rate > 0.0)) {
    throw ConfigError("config: learning rates must be > 0");
  }
  if (c.train.batch_size < 1 || c.dial_train.batch_size < 1) throw ConfigError("config: batch sizes must be >= 1");
  if (c.train.epochs < 0 || c.train.mapper_epochs < 0 || c.dial_train.epochs < 0) {
    throw ConfigError("config: epoch counts must be >= 0");
  }
  // Data-dependent sizes are filled in later; check the rest with placeholders.
  DialogueConfig d = c.dialogue;
  d.vocab_size = vocab::kFirstCorpusToken + 1;
  d.validate();
}

}  // namespace

TrainConfig RunConfig::rec_train_config() const {
  TrainConfig t;
  t.learning_rate = train.learning_rate;
  t.batch_size = train.batch_size;
  t.epochs = train.epochs;
  t.mapper_epochs = train.mapper_epochs;
  t.shuffle_seed = seed;
  return t;
}

DialogueTrainConfig RunConfig::dial_train_config() const {
  DialogueTrainConfig t;
  t.learning_rate = dial_train.learning_rate;
  t.batch_size = dial_train.batch_size;
  t.epochs = dial_train.epochs;
  t.shuffle_seed = seed;
  return t;
}

RunConfig parse_run_config(const std::string& ini_text, const std::vector<std::string>& assignments) {
  RunConfig c;
  auto bs = bindings(c);
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(ini_text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + section + "' outside any section");
    const bool known = std::any_of(bs.begin(), bs.end(), [&](const Binding& b) { return section == b.section; });
    if (!known) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      Field* f = find(bs, section, key);
      if (!f) throw ConfigError("config: unknown key " + where(section, key));
      assign(*f, value.data(), where(section, key));
    }
  }
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    const auto dot = a.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw ConfigError("config: override '" + a + "' is not section.key=value");
    }
    const std::string section = a.substr(0, dot);
    const std::string key = a.substr(dot + 1, eq - dot - 1);
    Field* f = find(bs, section, key);
    if (!f) throw ConfigError("config: unknown key " + where(section, key));
    assign(*f, a.substr(eq + 1), where(section, key));
  }
  validate(c);
  return c;
}

RunConfig resolve_run_config(const std::optional<std::filesystem::path>& file,
                             const std::vector<std::string>& assignments) {
  std::string text;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("config: cannot read " + file->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_run_config(text, assignments);
}

std::string to_ini(const RunConfig& config) {
  RunConfig copy = config;
  std::ostringstream out;
  std::string section;
  for (const auto& b : bindings(copy)) {
    if (section != b.section) {
      if (!section.empty()) out << "\n";
      section = b.section;
      out << "[" << section << "]\n";
    }
    out << b.key << " = " << format(b.field) << "\n";
  }
  return out.str();
}

}  // namespace uccr
