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

#include "uccr/rec.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"
#include "uccr/checkpoint_io.hpp"
#include "uccr/errors.hpp"
#include "uccr/session_learners.hpp"

namespace uccr {

using nlohmann::json;

// ---------------------------------------------------------------- config

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("model config: " + m); };
  if (dim < 1) fail("dim must be >= 1");
  if (layers < 1) fail("layers must be >= 1");
  if (!(lambda_e > 0.0) || !(lambda_i > 0.0)) fail("lambda_e and lambda_i must be > 0");
  if (!(lambda_a >= 0.0)) fail("lambda_a must be >= 0");
  if (!(lambda_cl >= 0.0)) fail("lambda_cl must be >= 0");
  if (!(tau_e > 0.0) || !(tau_w > 0.0)) fail("tau_e and tau_w must be > 0");
  if (!std::isfinite(delta_e) || !std::isfinite(delta_w) || std::abs(delta_e) > 1.0 || std::abs(delta_w) > 1.0) {
    fail("delta_e and delta_w must lie in [-1, 1]");
  }
  if (!(alpha_s >= 0.0) || !(beta_s >= 0.0)) fail("alpha_s and beta_s must be >= 0");
  if (!use_entity && !use_word) fail("at least one of the entity and word views must be enabled");
}

std::string ModelConfig::to_json() const {
  json j{{"dim", dim},
         {"layers", layers},
         {"lambda_e", lambda_e},
         {"lambda_i", lambda_i},
         {"lambda_a", lambda_a},
         {"lambda_cl", lambda_cl},
         {"tau_e", tau_e},
         {"tau_w", tau_w},
         {"delta_e", delta_e},
         {"delta_w", delta_w},
         {"alpha_s", alpha_s},
         {"beta_s", beta_s},
         {"use_entity", use_entity},
         {"use_word", use_word},
         {"use_item", use_item},
         {"use_history", use_history},
         {"use_lookalike", use_lookalike},
         {"include_system_mentions", include_system_mentions}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    json j = json::parse(text);
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("dim", c.dim);
    get("layers", c.layers);
    get("lambda_e", c.lambda_e);
    get("lambda_i", c.lambda_i);
    get("lambda_a", c.lambda_a);
    get("lambda_cl", c.lambda_cl);
    get("tau_e", c.tau_e);
    get("tau_w", c.tau_w);
    get("delta_e", c.delta_e);
    get("delta_w", c.delta_w);
    get("alpha_s", c.alpha_s);
    get("beta_s", c.beta_s);
    get("use_entity", c.use_entity);
    get("use_word", c.use_word);
    get("use_item", c.use_item);
    get("use_history", c.use_history);
    get("use_lookalike", c.use_lookalike);
    get("include_system_mentions", c.include_system_mentions);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t ModelConfig::hash() const { return fnv1a(to_json()); }

// ---------------------------------------------------------------- model

UccrModel::UccrModel(const Corpus& corpus, ModelConfig config, std::uint64_t seed)
    : corpus_(&corpus), config_(config), seed_(seed) {
  config_.validate();
  if (corpus.kg.num_items() == 0) throw DataError("corpus has no items");
  context_.include_system_mentions = config_.include_system_mentions;
  Rng rng(seed);
  const int d = config_.dim;
  const bool hist_needed = config_.use_history || config_.use_lookalike;

  kg_adj_ = build_relational_adjacency(corpus.kg);
  rgcn_ = make_rgcn_parameters(corpus.kg.num_entities(), static_cast<int>(corpus.kg.relations.size()), d,
                               config_.layers, params_, rng);
  if (config_.use_word) {
    word_adj_ = build_normalized_adjacency(corpus.lexical);
    gcn_ = make_gcn_parameters(corpus.lexical.num_words(), d, config_.layers, params_, rng);
    word_pool_ = make_attention_pool_parameters(d, params_, rng, "pool.word");
    if (hist_needed) hist_word_map_ = params_.add("hist.word.F", fan_in_matrix(d, d, d, rng));
  }
  if (config_.use_entity) {
    entity_pool_ = make_attention_pool_parameters(d, params_, rng, "pool.entity");
    if (hist_needed) entity_bilinear_ = params_.add("hist.entity.Ws", fan_in_matrix(d, d, d, rng));
  }
  const bool item_view = config_.use_item && config_.use_history;
  if (item_view) {
    item_pool_ = make_attention_pool_parameters(d, params_, rng, "pool.item");
    item_bilinear_ = params_.add("hist.item.Ws", fan_in_matrix(d, d, d, rng));
  }
  const bool both_views = config_.use_entity && config_.use_word;
  if (both_views && item_view) intent_gate_ = params_.add("gate.intent", fan_in_matrix(1, 2 * d, 2 * d, rng));
  if (config_.use_history) {
    if (config_.use_entity) entity_aspect_ = make_aspect_gate_parameters(d, params_, rng, "aspect.entity");
    if (config_.use_word) word_aspect_ = make_aspect_gate_parameters(d, params_, rng, "aspect.word");
  }
  if (both_views) fuse_gate_ = params_.add("gate.fuse", fan_in_matrix(1, 2 * d, 2 * d, rng));
}

UccrModel::Batch::Batch(const UccrModel& m) {
  entities_ = rgcn_encode(m.kg_adj_, m.rgcn_);
  items_ = ag::gather_rows(entities_, m.corpus_->kg.items);
  if (m.gcn_) words_ = gcn_encode(m.word_adj_, *m.gcn_);
}

const UccrModel::Batch::SessionVecs& UccrModel::Batch::session(const UccrModel& m, int user, int session_pos) {
  auto key = std::make_pair(user, session_pos);
  auto it = sessions_.find(key);
  if (it != sessions_.end()) return it->second;
  const Session& s = m.corpus_->users[user].sessions[session_pos];
  std::vector<int> ents, words;
  session_prefix(s, static_cast<int>(s.turns.size()), m.context_, ents, words);
  SessionVecs v;
  if (m.entity_pool_ && m.entity_bilinear_ && !ents.empty()) v.entity = pool_ids(ents, entities_, *m.entity_pool_);
  if (m.hist_word_map_) v.word = session_word_repr(words, *words_, *m.hist_word_map_);
  if (m.item_pool_) {
    std::vector<int> items;
    for (const auto& t : s.turns) {
      if (t.label_item) items.push_back(m.corpus_->kg.items[*t.label_item]);
    }
    if (!items.empty()) v.item = pool_ids(items, entities_, *m.item_pool_);
  }
  return sessions_.emplace(key, std::move(v)).first->second;
}

UserState UccrModel::forward(const RecInstance& inst, Batch& batch) const {
  const int d = config_.dim;
  const ag::Var zero = ag::zeros(1, d);
  UserState st;
  st.entity_cur = st.entity_hist = st.word_cur = st.word_hist = st.item_hist = zero;
  st.intent_cur = st.intent_hist = st.lookalike_entity = st.lookalike_word = zero;

  // Current-session views.
  if (entity_pool_) st.entity_cur = pool_ids(inst.context_entities, batch.entities_, *entity_pool_);
  if (word_pool_) st.word_cur = pool_ids(inst.context_words, *batch.words_, *word_pool_);

  // Historical views over sessions before this one.
  std::vector<ag::Var> h_e, h_w, h_d;
  for (int j = 0; j < inst.session; ++j) {
    const auto& v = batch.session(*this, inst.user, j);
    if (v.entity) h_e.push_back(*v.entity);
    if (v.word) h_w.push_back(*v.word);
    if (v.item) h_d.push_back(*v.item);
  }
  if (entity_bilinear_) st.entity_hist = aggregate_historical(st.entity_cur, h_e, *entity_bilinear_, config_.lambda_e);
  if (hist_word_map_) st.word_hist = historical_word_repr(h_w, d);

  auto intent = [&](const ag::Var& w, const ag::Var& e) {
    if (intent_gate_) return intent_gate(w, e, *intent_gate_).mixed;
    return config_.use_word ? w : e;
  };
  const bool item_view = config_.use_item && config_.use_history;
  if (item_view) {
    st.intent_cur = intent(st.word_cur, st.entity_cur);
    st.intent_hist = intent(st.word_hist, st.entity_hist);
    st.item_hist = aggregate_historical(st.intent_cur, h_d, *item_bilinear_, config_.lambda_i);
  }

  if (config_.use_lookalike) lookalike_for(inst, st);

  // Per-view fusion.
  auto view = [&](const ag::Var& cur, const ag::Var& hist, const ag::Var& la,
                  const std::optional<AspectGateParameters>& gate, double tau, double scale, double& coef) {
    const double s = config_.use_lookalike ? scale : 0.0;
    if (gate) {
      ViewOutput out = aspect_view(cur, hist, la, *gate, tau, s);
      coef = out.coefficient.scalar();
      return out.repr;
    }
    return s != 0.0 ? cur + s * la : cur;
  };
  std::optional<ag::Var> r_e, r_w;
  if (config_.use_entity) {
    r_e = view(st.entity_cur, st.entity_hist, st.lookalike_entity, entity_aspect_, config_.tau_e, config_.alpha_s,
               st.alpha_h);
  }
  if (config_.use_word) {
    r_w = view(st.word_cur, st.word_hist, st.lookalike_word, word_aspect_, config_.tau_w, config_.beta_s, st.beta_h);
  }
  ag::Var r = fuse_gate_ ? intent_gate(*r_w, *r_e, *fuse_gate_).mixed : (r_w ? *r_w : *r_e);
  if (item_view) {
    ViewOutput item = uccr::item_view(st.item_hist, st.intent_hist, st.intent_cur, config_.delta_e);
    st.gamma_h = item.coefficient.scalar();
    if (st.gamma_h > 0.0) r = r + item.repr;
  }
  st.r = r;
  st.logits = ag::matmul_nt(r, batch.items_);
  return st;
}

void UccrModel::lookalike_for(const RecInstance& inst, UserState& st) const {
  auto it = frozen_.find({inst.user, inst.session, inst.turn});
  if (it != frozen_.end() && store_.epoch() == epoch_) {
    if (config_.use_entity) st.lookalike_entity = ag::constant(it->second.entity);
    if (config_.use_word) st.lookalike_word = ag::constant(it->second.word);
    return;
  }
  if (config_.use_entity) {
    st.lookalike_entity =
        store_.contribution(st.entity_hist, LookalikeView::kEntity, config_.delta_e, inst.user, epoch_);
  }
  if (config_.use_word) {
    st.lookalike_word = store_.contribution(st.word_hist, LookalikeView::kWord, config_.delta_w, inst.user, epoch_);
  }
}

std::vector<AlignmentBatch> UccrModel::alignment_tasks(std::span<const UserState> states,
                                                       std::span<const RecInstance> insts) const {
  std::vector<AlignmentBatch> tasks;
  const bool both = config_.use_entity && config_.use_word;
  const bool hist_pair = both && config_.use_history;
  const bool item_pair = config_.use_item && config_.use_history;
  AlignmentBatch cur, hist, item;
  std::set<int> seen;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    if (!seen.insert(insts[i].user).second) continue;
    const UserState& s = states[i];
    if (both) {
      cur.v1.push_back(s.word_cur);
      cur.v2.push_back(s.entity_cur);
    }
    if (hist_pair) {
      hist.v1.push_back(s.word_hist);
      hist.v2.push_back(s.entity_hist);
    }
    if (item_pair) {
      item.v1.push_back(s.item_hist);
      item.v2.push_back(s.intent_hist);
    }
  }
  if (both) tasks.push_back(std::move(cur));
  if (hist_pair) tasks.push_back(std::move(hist));
  if (item_pair) tasks.push_back(std::move(item));
  return tasks;
}

LossParts UccrModel::batch_loss(std::span<const RecInstance> insts, bool with_nll, double align_weight) const {
  if (insts.empty()) throw std::invalid_argument("empty batch");
  Batch batch(*this);
  std::vector<UserState> states;
  states.reserve(insts.size());
  for (const auto& inst : insts) states.push_back(forward(inst, batch));

  LossParts out;
  out.total = ag::zeros(1, 1);
  if (with_nll) {
    ag::Var nll = ag::zeros(1, 1);
    for (std::size_t i = 0; i < insts.size(); ++i) {
      nll = nll - ag::element(ag::log_softmax_rows(states[i].logits), 0, insts[i].label_item);
    }
    nll = ag::scale(nll, 1.0 / static_cast<double>(insts.size()));
    out.nll = nll.scalar();
    out.total = nll;
  }
  if (align_weight != 0.0) {
    ag::Var align = ag::zeros(1, 1);
    for (const auto& task : alignment_tasks(states, insts)) align = align + alignment_loss(task, config_.lambda_a);
    out.align = align.scalar();
    out.total = out.total + align_weight * align;
  }
  return out;
}

ag::Matrix UccrModel::score(std::span<const RecInstance> insts) const {
  ag::NoGradGuard guard;
  Batch batch(*this);
  ag::Matrix out(static_cast<ag::Index>(insts.size()), corpus_->kg.num_items());
  for (std::size_t i = 0; i < insts.size(); ++i) {
    out.row(static_cast<ag::Index>(i)) = ag::softmax_rows(forward(insts[i], batch).logits).value();
  }
  return out;
}

void UccrModel::rebuild_snapshots(std::span<const RecInstance> train, std::span<const RecInstance> queries) {
  if (!config_.use_lookalike) return;
  ag::NoGradGuard guard;
  Batch batch(*this);
  // forward() consults the store; give it an empty, current one while building.
  store_ = SnapshotStore({}, epoch_);
  frozen_.clear();
  std::vector<SnapshotEntry> entries;
  entries.reserve(train.size());
  std::vector<UserState> states;
  states.reserve(train.size() + queries.size());
  for (const auto& inst : train) {
    UserState st = forward(inst, batch);
    entries.push_back(SnapshotEntry{inst.user, inst.session_index, inst.turn, st.word_hist.value(),
                                    st.word_cur.value(), st.entity_hist.value(), st.entity_cur.value()});
    states.push_back(std::move(st));
  }
  for (const auto& inst : queries) states.push_back(forward(inst, batch));
  store_ = SnapshotStore(std::move(entries), epoch_);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const RecInstance& inst = i < train.size() ? train[i] : queries[i - train.size()];
    UserState& st = states[i];
    lookalike_for(inst, st);
    frozen_[{inst.user, inst.session, inst.turn}] = {st.lookalike_entity.value(), st.lookalike_word.value()};
  }
}

// ---------------------------------------------------------------- training

std::vector<EpochLog> train_rec(UccrModel& model, std::span<const RecInstance> train, const TrainConfig& config) {
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (config.epochs < 0 || config.mapper_epochs < 0) throw ConfigError("epoch counts must be >= 0");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (train.empty()) throw DataError("no training instances");

  AdamOptions opts;
  opts.learning_rate = config.learning_rate;
  Adam adam(model.params(), opts);
  Rng shuffle_rng(config.shuffle_seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochLog> logs;

  auto run_epoch = [&](const std::string& phase, int epoch_in_phase) {
    const auto start = std::chrono::steady_clock::now();
    model.set_epoch(model.epoch() + 1);
    model.rebuild_snapshots(train);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const bool joint = phase == "joint";
    const double align_weight = joint ? model.config().lambda_cl : 1.0;
    EpochLog log{phase, epoch_in_phase};
    int batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(config.batch_size)) {
      std::vector<RecInstance> batch;
      for (std::size_t k = b; k < std::min(order.size(), b + config.batch_size); ++k) batch.push_back(train[order[k]]);
      model.params().zero_grad();
      LossParts loss = model.batch_loss(batch, joint, align_weight);
      const double value = loss.total.scalar();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite " + phase + " loss at epoch " + std::to_string(epoch_in_phase) + ", batch " +
                           std::to_string(batches + 1));
      }
      if (loss.total.requires_grad()) {
        ag::backward(loss.total);
        adam.step();
      }
      log.loss += value;
      log.nll += loss.nll;
      log.align += loss.align;
      ++batches;
    }
    log.loss /= batches;
    log.nll /= batches;
    log.align /= batches;
    if (!model.params().all_finite()) {
      throw NumericError("non-finite parameters after " + phase + " epoch " + std::to_string(epoch_in_phase));
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    logs.push_back(log);
    if (config.on_epoch) config.on_epoch(log);
  };

  for (int e = 1; e <= config.mapper_epochs; ++e) run_epoch("mapper", e);
  for (int e = 1; e <= config.epochs; ++e) run_epoch("joint", e);
  return logs;
}

// ---------------------------------------------------------------- checkpoint

namespace {
constexpr char kMagic[] = "UCCR-CHECKPOINT-1\n";
}

void save_checkpoint(const UccrModel& model, const std::filesystem::path& path) {
  json header;
  header["config"] = json::parse(model.config().to_json());
  header["config_hash"] = model.config().hash();
  header["seed"] = model.seed();
  header["epoch"] = model.epoch();
  const Corpus& c = model.corpus();
  header["corpus"] = {{"entities", c.kg.num_entities()},
                      {"relations", c.kg.relations.size()},
                      {"items", c.kg.num_items()},
                      {"words", c.lexical.num_words()}};
  write_checkpoint_file(path, kMagic, std::move(header), model.params());
}

UccrModel load_checkpoint(const std::filesystem::path& path, const Corpus& corpus) {
  CheckpointReader reader(path, kMagic, "recommendation");
  const json& header = reader.header();
  try {
    ModelConfig config = ModelConfig::from_json(header.at("config").dump());
    if (header.at("config_hash").get<std::uint64_t>() != config.hash()) {
      throw DataError(path.string() + ": config hash mismatch");
    }
    const auto& cs = header.at("corpus");
    if (cs.at("entities").get<int>() != corpus.kg.num_entities() ||
        cs.at("relations").get<std::size_t>() != corpus.kg.relations.size() ||
        cs.at("items").get<int>() != corpus.kg.num_items() || cs.at("words").get<int>() != corpus.lexical.num_words()) {
      throw DataError(path.string() + ": checkpoint was trained on a corpus with different table sizes");
    }
    UccrModel model(corpus, config, header.at("seed").get<std::uint64_t>());
    model.set_epoch(header.at("epoch").get<long>());
    reader.read_into(model.params());
    return model;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad header: " + e.what());
  }
}

}  // namespace uccr
