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

#include "uccr/dialogue.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "uccr/checkpoint_io.hpp"
#include "uccr/errors.hpp"
#include "uccr/rec.hpp"

namespace uccr {

using ag::Matrix;
using ag::Var;
using nlohmann::json;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// ---------------------------------------------------------------- config

void DialogueConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("dialogue config: " + m); };
  if (vocab_size <= vocab::kFirstCorpusToken) fail("vocab_size must exceed the special tokens");
  if (user_dim < 0) fail("user_dim must be >= 0");
  if (dim < 1 || heads < 1) fail("dim and heads must be >= 1");
  if (dim % heads != 0) fail("dim must be divisible by heads");
  if (encoder_layers < 1 || decoder_layers < 1) fail("layer counts must be >= 1");
  if (ff_dim < 0) fail("ff_dim must be >= 0");
  if (max_context < 1 || max_response < 1) fail("max_context and max_response must be >= 1");
}

std::string DialogueConfig::to_json() const {
  return json{{"vocab_size", vocab_size},   {"user_dim", user_dim},
              {"dim", dim},                 {"heads", heads},
              {"encoder_layers", encoder_layers}, {"decoder_layers", decoder_layers},
              {"ff_dim", ff_dim},           {"max_context", max_context},
              {"max_response", max_response}}
      .dump();
}

DialogueConfig DialogueConfig::from_json(const std::string& text) {
  DialogueConfig c;
  try {
    json j = json::parse(text);
    auto get = [&](const char* key, int& field) {
      if (j.contains(key)) field = j.at(key).get<int>();
    };
    get("vocab_size", c.vocab_size);
    get("user_dim", c.user_dim);
    get("dim", c.dim);
    get("heads", c.heads);
    get("encoder_layers", c.encoder_layers);
    get("decoder_layers", c.decoder_layers);
    get("ff_dim", c.ff_dim);
    get("max_context", c.max_context);
    get("max_response", c.max_response);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("dialogue config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t DialogueConfig::hash() const { return fnv1a(to_json()); }

void GenerationConfig::validate() const {
  if (max_length < 1) throw ConfigError("generation: max_length must be >= 1");
  if (beam_width < 1) throw ConfigError("generation: beam_width must be >= 1");
}

// ---------------------------------------------------------------- examples

std::vector<DialogueExample> extract_dialogue_examples(const Corpus& corpus, const Split& split, Part part,
                                                       int max_context, std::size_t* truncated) {
  if (max_context < 1) throw ConfigError("max_context must be >= 1");
  std::vector<DialogueExample> out;
  std::size_t cut = 0;
  for (int u = 0; u < static_cast<int>(corpus.users.size()); ++u) {
    const UserRecord& rec = corpus.users[u];
    for (int s = 0; s < static_cast<int>(rec.sessions.size()); ++s) {
      const Session& sess = rec.sessions[s];
      if (split.part_of(rec.user_id, sess.session_index) != part) continue;
      for (int t = 0; t < static_cast<int>(sess.turns.size()); ++t) {
        if (sess.turns[t].speaker != Speaker::kSystem) continue;
        DialogueExample ex;
        ex.user = u;
        ex.session = s;
        ex.turn = t;
        for (int k = 0; k < t; ++k) {
          if (k > 0) ex.context.push_back(vocab::kSep);
          for (int tok : sess.turns[k].tokens) ex.context.push_back(vocab::from_corpus(tok));
        }
        if (static_cast<int>(ex.context.size()) > max_context) {
          ex.context.erase(ex.context.begin(), ex.context.end() - max_context);
          ++cut;
        }
        ex.reference.push_back(vocab::kBos);
        for (int tok : sess.turns[t].tokens) ex.reference.push_back(vocab::from_corpus(tok));
        ex.reference.push_back(vocab::kEos);
        out.push_back(std::move(ex));
      }
    }
  }
  if (truncated) *truncated = cut;
  return out;
}

void attach_user_representations(std::span<DialogueExample> examples, UccrModel& rec,
                                 std::span<const RecInstance> train) {
  const Corpus& corpus = rec.corpus();
  ContextOptions opts;
  opts.include_system_mentions = rec.config().include_system_mentions;
  std::vector<RecInstance> queries;
  queries.reserve(examples.size());
  for (const auto& ex : examples) {
    const Session& sess = corpus.users.at(ex.user).sessions.at(ex.session);
    RecInstance inst;
    inst.user = ex.user;
    inst.session = ex.session;
    inst.session_index = sess.session_index;
    inst.turn = ex.turn;
    session_prefix(sess, ex.turn, opts, inst.context_entities, inst.context_words);
    inst.label_item = sess.turns.at(ex.turn).label_item.value_or(0);
    queries.push_back(std::move(inst));
  }
  rec.rebuild_snapshots(train, queries);
  ag::NoGradGuard guard;
  UccrModel::Batch batch(rec);
  for (std::size_t i = 0; i < examples.size(); ++i) examples[i].user_repr = rec.forward(queries[i], batch).r.value();
}

// ---------------------------------------------------------------- model

namespace {

Matrix sinusoid(ag::Index n, ag::Index d) {
  Matrix pe(n, d);
  for (ag::Index p = 0; p < n; ++p) {
    for (ag::Index i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(d));
      pe(p, i) = i % 2 == 0 ? std::sin(static_cast<double>(p) * rate) : std::cos(static_cast<double>(p) * rate);
    }
  }
  return pe;
}

// Keys marked false are hidden. A row left with no visible key sees itself.
Mask key_mask(std::span<const int> query_tokens, std::span<const int> key_tokens, bool causal) {
  const auto nq = static_cast<ag::Index>(query_tokens.size());
  const auto nk = static_cast<ag::Index>(key_tokens.size());
  Mask m(nq, nk);
  for (ag::Index i = 0; i < nq; ++i) {
    bool any = false;
    for (ag::Index j = 0; j < nk; ++j) {
      m(i, j) = key_tokens[j] != vocab::kPad && (!causal || j <= i);
      any = any || m(i, j);
    }
    if (!any) m(i, std::min(i, nk - 1)) = true;
  }
  return m;
}

Var one_hot_targets(std::span<const int> targets, int vocab_size, std::size_t* counted) {
  Matrix m = Matrix::Zero(static_cast<ag::Index>(targets.size()), vocab_size);
  std::size_t n = 0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (targets[t] == vocab::kPad) continue;
    m(static_cast<ag::Index>(t), targets[t]) = 1.0;
    ++n;
  }
  *counted = n;
  return ag::constant(std::move(m));
}

}  // namespace

DialogueModel::DialogueModel(DialogueConfig config, std::uint64_t seed) : config_(config), seed_(seed) {
  config_.validate();
  Rng rng(seed);
  const int d = config_.dim;
  const int v = config_.vocab_size;
  embedding_ = params_.add("embedding", uniform_matrix(v, d, 1.0 / std::sqrt(static_cast<double>(d)), rng));
  for (int l = 0; l < config_.encoder_layers; ++l) {
    const std::string p = "enc." + std::to_string(l);
    EncoderLayer layer;
    layer.n1 = make_norm(p + ".norm1");
    layer.self = make_attention(p + ".self", rng);
    layer.n2 = make_norm(p + ".norm2");
    layer.ff = make_ff(p + ".ff", rng);
    encoder_.push_back(layer);
  }
  encoder_norm_ = make_norm("enc.norm");
  for (int l = 0; l < config_.decoder_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    DecoderLayer layer;
    layer.n1 = make_norm(p + ".norm1");
    layer.self = make_attention(p + ".self", rng);
    layer.n2 = make_norm(p + ".norm2");
    layer.cross = make_attention(p + ".cross", rng);
    layer.n3 = make_norm(p + ".norm3");
    layer.ff = make_ff(p + ".ff", rng);
    decoder_.push_back(layer);
  }
  decoder_norm_ = make_norm("dec.norm");
  output_ = params_.add("gen.W", fan_in_matrix(v, d, d, rng));
  if (config_.user_dim > 0) {
    bias_map_ = params_.add("gen.M", fan_in_matrix(v, config_.user_dim, config_.user_dim, rng));
  }
}

DialogueModel::Attention DialogueModel::make_attention(const std::string& prefix, Rng& rng) {
  const int d = config_.dim;
  Attention a;
  a.wq = params_.add(prefix + ".wq", fan_in_matrix(d, d, d, rng));
  a.wk = params_.add(prefix + ".wk", fan_in_matrix(d, d, d, rng));
  a.wv = params_.add(prefix + ".wv", fan_in_matrix(d, d, d, rng));
  a.wo = params_.add(prefix + ".wo", fan_in_matrix(d, d, d, rng));
  a.bq = params_.add(prefix + ".bq", Matrix::Zero(1, d));
  a.bk = params_.add(prefix + ".bk", Matrix::Zero(1, d));
  a.bv = params_.add(prefix + ".bv", Matrix::Zero(1, d));
  a.bo = params_.add(prefix + ".bo", Matrix::Zero(1, d));
  return a;
}

DialogueModel::FeedForward DialogueModel::make_ff(const std::string& prefix, Rng& rng) {
  const int d = config_.dim;
  const int f = config_.ff_width();
  FeedForward ff;
  ff.w1 = params_.add(prefix + ".w1", fan_in_matrix(d, f, d, rng));
  ff.b1 = params_.add(prefix + ".b1", Matrix::Zero(1, f));
  ff.w2 = params_.add(prefix + ".w2", fan_in_matrix(f, d, f, rng));
  ff.b2 = params_.add(prefix + ".b2", Matrix::Zero(1, d));
  return ff;
}

DialogueModel::Norm DialogueModel::make_norm(const std::string& prefix) {
  return {params_.add(prefix + ".gain", Matrix::Ones(1, config_.dim)),
          params_.add(prefix + ".bias", Matrix::Zero(1, config_.dim))};
}

Var DialogueModel::embed(std::span<const int> ids) const {
  const double s = std::sqrt(static_cast<double>(config_.dim));
  Var x = s * ag::gather_rows(embedding_, ids);
  return x + ag::constant(sinusoid(static_cast<ag::Index>(ids.size()), config_.dim));
}

Var DialogueModel::norm(const Norm& n, const Var& x) const { return ag::layer_norm_rows(x, n.gain, n.bias); }

Var DialogueModel::feed_forward(const FeedForward& f, const Var& x) const {
  Var h = ag::gelu(ag::add_row(ag::matmul(x, f.w1), f.b1));
  return ag::add_row(ag::matmul(h, f.w2), f.b2);
}

Var DialogueModel::attend(const Attention& a, const Var& x, const Var& kv, const Mask& mask) const {
  const int dh = config_.dim / config_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Var q = ag::add_row(ag::matmul(x, a.wq), a.bq);
  Var k = ag::add_row(ag::matmul(kv, a.wk), a.bk);
  Var v = ag::add_row(ag::matmul(kv, a.wv), a.bv);
  std::vector<Var> heads;
  heads.reserve(config_.heads);
  for (int h = 0; h < config_.heads; ++h) {
    Var qh = ag::slice_cols(q, h * dh, dh);
    Var kh = ag::slice_cols(k, h * dh, dh);
    Var vh = ag::slice_cols(v, h * dh, dh);
    Var w = ag::masked_softmax_rows(scale * ag::matmul_nt(qh, kh), mask);
    heads.push_back(ag::matmul(w, vh));
  }
  return ag::add_row(ag::matmul(ag::concat_cols(heads), a.wo), a.bo);
}

DialogueModel::Encoded DialogueModel::encode(std::span<const int> context) const {
  Encoded enc;
  if (context.empty()) {
    enc.tokens = {vocab::kBos};
  } else {
    auto first = context.begin();
    if (static_cast<int>(context.size()) > config_.max_context) {
      first = context.end() - config_.max_context;
      ++truncations_;
    }
    enc.tokens.assign(first, context.end());
  }
  for (int& t : enc.tokens) {
    if (t < 0 || t >= config_.vocab_size) t = vocab::kUnk;
  }
  const Mask mask = key_mask(enc.tokens, enc.tokens, false);
  Var x = embed(enc.tokens);
  for (const auto& layer : encoder_) {
    Var h = norm(layer.n1, x);
    x = x + attend(layer.self, h, h, mask);
    x = x + feed_forward(layer.ff, norm(layer.n2, x));
  }
  enc.states = norm(encoder_norm_, x);
  return enc;
}

Var DialogueModel::decode(const Encoded& memory, std::span<const int> prefix) const {
  if (prefix.empty()) throw std::invalid_argument("decode: empty prefix");
  std::vector<int> ids(prefix.begin(), prefix.end());
  for (int& t : ids) {
    if (t < 0 || t >= config_.vocab_size) t = vocab::kUnk;
  }
  const Mask self_mask = key_mask(ids, ids, true);
  const Mask cross_mask = key_mask(ids, memory.tokens, false);
  Var y = embed(ids);
  for (const auto& layer : decoder_) {
    Var h = norm(layer.n1, y);
    y = y + attend(layer.self, h, h, self_mask);
    y = y + attend(layer.cross, norm(layer.n2, y), memory.states, cross_mask);
    y = y + feed_forward(layer.ff, norm(layer.n3, y));
  }
  return norm(decoder_norm_, y);
}

Var DialogueModel::logits(const Var& states, const Matrix& user_repr) const {
  if (user_repr.size() == 0) return logits(states, Var());
  return logits(states, ag::constant(user_repr));
}

Var DialogueModel::logits(const Var& states, const Var& user_repr) const {
  Var out = ag::matmul_nt(states, output_);
  if (!bias_map_.defined() || !user_repr.defined()) return out;
  if (user_repr.rows() != 1 || user_repr.cols() != config_.user_dim) {
    throw std::invalid_argument("logits: user representation must be 1 x " + std::to_string(config_.user_dim));
  }
  return ag::add_row(out, ag::matmul_nt(user_repr, bias_map_));
}

std::pair<Var, std::size_t> DialogueModel::example_nll(const DialogueExample& ex) const {
  const auto& ref = ex.reference;
  if (ref.size() < 2 || ref.front() != vocab::kBos) {
    throw std::invalid_argument("dialogue reference must start with BOS and hold a target");
  }
  auto last = std::find_if(ref.rbegin(), ref.rend(), [](int t) { return t != vocab::kPad; });
  if (*last != vocab::kEos) throw std::invalid_argument("dialogue reference must end with EOS");
  std::vector<int> input(ref.begin(), ref.end() - 1);
  std::vector<int> target(ref.begin() + 1, ref.end());
  for (int& t : target) {
    if (t < 0 || t >= config_.vocab_size) t = vocab::kUnk;
  }
  Encoded memory = encode(ex.context);
  Var lp = ag::log_softmax_rows(logits(decode(memory, input), ex.user_repr));
  std::size_t n = 0;
  Var pick = one_hot_targets(target, config_.vocab_size, &n);
  return {ag::neg(ag::sum(ag::mul(lp, pick))), n};
}

Var DialogueModel::loss(std::span<const DialogueExample> batch) const {
  if (batch.empty()) throw std::invalid_argument("dialogue loss: empty batch");
  Var total;
  std::size_t tokens = 0;
  for (const auto& ex : batch) {
    auto [nll, n] = example_nll(ex);
    total = total.defined() ? total + nll : nll;
    tokens += n;
  }
  if (tokens == 0) throw std::invalid_argument("dialogue loss: no scored tokens");
  return (1.0 / static_cast<double>(tokens)) * total;
}

namespace {

int argmax_row(const Matrix& row) {
  int best = 0;
  for (ag::Index j = 1; j < row.cols(); ++j) {
    if (row(0, j) > row(0, best)) best = static_cast<int>(j);
  }
  return best;
}

}  // namespace

std::vector<int> DialogueModel::generate(std::span<const int> context, const Matrix& user_repr,
                                         const GenerationConfig& gen) const {
  gen.validate();
  ag::NoGradGuard guard;
  const Encoded memory = encode(context);
  auto next_logp = [&](const std::vector<int>& prefix) {
    Var q = decode(memory, prefix);
    Var last = ag::slice_rows(q, q.rows() - 1, 1);
    return ag::log_softmax_rows(logits(last, user_repr)).value();
  };

  if (gen.beam_width == 1) {
    std::vector<int> seq = {vocab::kBos};
    while (static_cast<int>(seq.size()) - 1 < gen.max_length) {
      const int tok = argmax_row(next_logp(seq));
      seq.push_back(tok);
      if (tok == vocab::kEos) break;
    }
    return {seq.begin() + 1, seq.end()};
  }

  struct Beam {
    std::vector<int> seq;
    double score = 0.0;
    bool done = false;
  };
  std::vector<Beam> beams = {{{vocab::kBos}, 0.0, false}};
  for (int step = 0; step < gen.max_length; ++step) {
    std::vector<Beam> cand;
    for (const auto& b : beams) {
      if (b.done) {
        cand.push_back(b);
        continue;
      }
      const Matrix lp = next_logp(b.seq);
      for (ag::Index v = 0; v < lp.cols(); ++v) {
        Beam nb{b.seq, b.score + lp(0, v), v == vocab::kEos};
        nb.seq.push_back(static_cast<int>(v));
        cand.push_back(std::move(nb));
      }
    }
    // Stable: earlier beams and lower token ids win ties.
    std::stable_sort(cand.begin(), cand.end(), [](const Beam& a, const Beam& b) { return a.score > b.score; });
    if (static_cast<int>(cand.size()) > gen.beam_width) cand.resize(gen.beam_width);
    beams = std::move(cand);
    if (std::all_of(beams.begin(), beams.end(), [](const Beam& b) { return b.done; })) break;
  }
  return {beams.front().seq.begin() + 1, beams.front().seq.end()};
}

// ---------------------------------------------------------------- training

std::vector<DialogueEpochLog> train_dialogue(DialogueModel& model, std::span<const DialogueExample> train,
                                             const DialogueTrainConfig& config) {
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (config.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (train.empty()) throw DataError("no dialogue training examples");

  AdamOptions opts;
  opts.learning_rate = config.learning_rate;
  Adam adam(model.params(), opts);
  Rng shuffle_rng(config.shuffle_seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<DialogueEpochLog> logs;
  for (int e = 1; e <= config.epochs; ++e) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double nll = 0.0;
    std::size_t tokens = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(config.batch_size)) {
      std::vector<DialogueExample> batch;
      for (std::size_t k = b; k < std::min(order.size(), b + config.batch_size); ++k) batch.push_back(train[order[k]]);
      model.params().zero_grad();
      Var total;
      std::size_t n = 0;
      for (const auto& ex : batch) {
        auto [part, count] = model.example_nll(ex);
        total = total.defined() ? total + part : part;
        n += count;
      }
      if (n == 0) continue;
      const double value = total.scalar();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite dialogue loss at epoch " + std::to_string(e));
      }
      ag::backward((1.0 / static_cast<double>(n)) * total);
      adam.step();
      nll += value;
      tokens += n;
    }
    if (!model.params().all_finite()) throw NumericError("non-finite parameters after dialogue epoch " + std::to_string(e));
    DialogueEpochLog log{e, tokens ? nll / static_cast<double>(tokens) : 0.0,
                         std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    logs.push_back(log);
    if (config.on_epoch) config.on_epoch(log);
  }
  return logs;
}

// ---------------------------------------------------------------- checkpoint

namespace {
constexpr char kDialMagic[] = "UCCR-DIALOGUE-1\n";
}

void save_dialogue_checkpoint(const DialogueModel& model, const std::filesystem::path& path) {
  json header;
  header["config"] = json::parse(model.config().to_json());
  header["config_hash"] = model.config().hash();
  header["seed"] = model.seed();
  write_checkpoint_file(path, kDialMagic, std::move(header), model.params());
}

DialogueModel load_dialogue_checkpoint(const std::filesystem::path& path) {
  CheckpointReader reader(path, kDialMagic, "dialogue");
  const json& header = reader.header();
  try {
    DialogueConfig config = DialogueConfig::from_json(header.at("config").dump());
    if (header.at("config_hash").get<std::uint64_t>() != config.hash()) {
      throw DataError(path.string() + ": config hash mismatch");
    }
    DialogueModel model(config, header.at("seed").get<std::uint64_t>());
    reader.read_into(model.params());
    return model;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad header: " + e.what());
  }
}

// ---------------------------------------------------------------- metrics

namespace {

std::map<std::vector<int>, int> ngram_counts(const TokenSeq& s, int n) {
  std::map<std::vector<int>, int> counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[std::vector<int>(s.begin() + i, s.begin() + i + n)];
  return counts;
}

std::size_t ngram_total(const TokenSeq& s, int n) { return s.size() >= static_cast<std::size_t>(n) ? s.size() - n + 1 : 0; }

}  // namespace

double corpus_bleu(std::span<const TokenSeq> hypotheses, std::span<const TokenSeq> references, int n) {
  if (hypotheses.size() != references.size()) throw std::invalid_argument("bleu: hypothesis/reference count mismatch");
  if (hypotheses.empty()) throw std::invalid_argument("bleu: empty corpus");
  if (n < 1) throw std::invalid_argument("bleu: order must be >= 1");
  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    double matched = 0.0, total = 0.0;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
      const auto hc = ngram_counts(hypotheses[i], k);
      const auto rc = ngram_counts(references[i], k);
      for (const auto& [g, c] : hc) {
        auto it = rc.find(g);
        if (it != rc.end()) matched += std::min(c, it->second);
      }
      total += static_cast<double>(ngram_total(hypotheses[i], k));
    }
    if (total == 0.0) return 0.0;
    log_sum += std::log((matched > 0.0 ? matched : 0.1) / total);
  }
  double hyp_len = 0.0, ref_len = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_len += static_cast<double>(hypotheses[i].size());
    ref_len += static_cast<double>(references[i].size());
  }
  const double bp = hyp_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  return bp * std::exp(log_sum / n);
}

double distinct_corpus(std::span<const TokenSeq> hypotheses, int n) {
  std::set<std::vector<int>> seen;
  std::size_t total = 0;
  for (const auto& h : hypotheses) {
    for (const auto& [g, c] : ngram_counts(h, n)) seen.insert(g);
    total += ngram_total(h, n);
  }
  return total ? static_cast<double>(seen.size()) / static_cast<double>(total) : 0.0;
}

double distinct_per_sentence(std::span<const TokenSeq> hypotheses, int n) {
  if (hypotheses.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& h : hypotheses) sum += static_cast<double>(ngram_counts(h, n).size());
  return sum / static_cast<double>(hypotheses.size());
}

double perplexity(double total_nll, std::size_t tokens) {
  if (tokens == 0) throw std::invalid_argument("perplexity: no tokens");
  return std::exp(total_nll / static_cast<double>(tokens));
}

std::map<std::string, double> evaluate_dialogue(std::span<const TokenSeq> hypotheses,
                                                std::span<const TokenSeq> references, double total_nll,
                                                std::size_t tokens) {
  std::map<std::string, double> out;
  out["bleu2"] = corpus_bleu(hypotheses, references, 2);
  out["bleu3"] = corpus_bleu(hypotheses, references, 3);
  for (int k = 2; k <= 4; ++k) {
    out["dist" + std::to_string(k)] = distinct_corpus(hypotheses, k);
    out["dist" + std::to_string(k) + "_sent"] = distinct_per_sentence(hypotheses, k);
  }
  out["ppl"] = perplexity(total_nll, tokens);
  return out;
}

TokenSeq strip_specials(std::span<const int> seq) {
  auto first = seq.begin();
  if (first != seq.end() && *first == vocab::kBos) ++first;
  auto end = std::find(first, seq.end(), vocab::kEos);
  return {first, end};
}

}  // namespace uccr
