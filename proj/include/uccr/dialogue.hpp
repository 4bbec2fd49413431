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

// Transformer encoder-decoder response generator whose next-token logits
// carry a linear bias from the user representation, plus generation metrics.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "uccr/autograd.hpp"
#include "uccr/corpus.hpp"
#include "uccr/params.hpp"

namespace uccr {

class UccrModel;

// Vocabulary layout: five specials, then corpus token t at id t + kFirstCorpusToken.
namespace vocab {
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kSep = 4;  // turn delimiter inside a context
inline constexpr int kFirstCorpusToken = 5;
inline int from_corpus(int token) { return token + kFirstCorpusToken; }
}  // namespace vocab

struct DialogueConfig {
  int vocab_size = 0;  // set from the corpus
  int user_dim = 0;    // width of r(u); 0 disables the bias map
  int dim = 300;
  int heads = 6;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int ff_dim = 0;  // 0 means 4 * dim
  int max_context = 128;
  int max_response = 32;

  int ff_width() const { return ff_dim > 0 ? ff_dim : 4 * dim; }
  // Throws ConfigError.
  void validate() const;
  std::string to_json() const;
  static DialogueConfig from_json(const std::string& text);
  std::uint64_t hash() const;
};

struct GenerationConfig {
  int max_length = 32;
  int beam_width = 1;  // 1 is greedy
  void validate() const;
};

struct DialogueExample {
  int user = 0;
  int session = 0;
  int turn = 0;
  std::vector<int> context;    // vocabulary ids, SEP between turns, no BOS
  std::vector<int> reference;  // BOS, tokens..., EOS
  ag::Matrix user_repr;        // 1 x user_dim, or empty for none
};

// One example per system turn of every session in `part`. The context is the
// session prefix before that turn. Contexts longer than `max_context` are cut
// from the left; `truncated` receives how many were cut.
std::vector<DialogueExample> extract_dialogue_examples(const Corpus& corpus, const Split& split, Part part,
                                                       int max_context, std::size_t* truncated = nullptr);

// Fills user_repr with r(u) at each example's turn. Rebuilds the model's
// look-alike snapshots from `train` with the examples as queries.
void attach_user_representations(std::span<DialogueExample> examples, UccrModel& rec,
                                 std::span<const RecInstance> train);

class DialogueModel {
 public:
  DialogueModel(DialogueConfig config, std::uint64_t seed);

  const DialogueConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  struct Encoded {
    ag::Var states;           // one row per entry of tokens
    std::vector<int> tokens;  // the input after substitutions below
  };
  // Empty input encodes a single BOS position. PAD positions are hidden from
  // attention. Inputs longer than max_context keep their last max_context
  // tokens. Ids outside the vocabulary read as UNK.
  Encoded encode(std::span<const int> context) const;

  // Decoder output states q, one row per position of `prefix`.
  ag::Var decode(const Encoded& memory, std::span<const int> prefix) const;

  // Logits W^G q + M r(u), one row per state row. r(u) may be empty.
  ag::Var logits(const ag::Var& states, const ag::Matrix& user_repr) const;
  ag::Var logits(const ag::Var& states, const ag::Var& user_repr) const;

  // Summed NLL of reference[1..] given reference[..-1] (PAD targets skipped)
  // and the number of scored tokens.
  std::pair<ag::Var, std::size_t> example_nll(const DialogueExample& ex) const;
  // Token-level mean NLL over the batch.
  ag::Var loss(std::span<const DialogueExample> batch) const;

  // Tokens after BOS, up to and including EOS, at most max_length of them.
  std::vector<int> generate(std::span<const int> context, const ag::Matrix& user_repr,
                            const GenerationConfig& gen) const;

  // Inputs clipped by encode() since construction.
  std::size_t truncations() const { return truncations_; }

 private:
  struct Attention {
    ag::Var wq, wk, wv, wo, bq, bk, bv, bo;
  };
  struct FeedForward {
    ag::Var w1, b1, w2, b2;
  };
  struct Norm {
    ag::Var gain, bias;
  };
  struct EncoderLayer {
    Norm n1, n2;
    Attention self;
    FeedForward ff;
  };
  struct DecoderLayer {
    Norm n1, n2, n3;
    Attention self, cross;
    FeedForward ff;
  };

  Attention make_attention(const std::string& prefix, Rng& rng);
  FeedForward make_ff(const std::string& prefix, Rng& rng);
  Norm make_norm(const std::string& prefix);
  ag::Var embed(std::span<const int> ids) const;
  ag::Var attend(const Attention& a, const ag::Var& x, const ag::Var& kv,
                 const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) const;
  ag::Var feed_forward(const FeedForward& f, const ag::Var& x) const;
  ag::Var norm(const Norm& n, const ag::Var& x) const;

  DialogueConfig config_;
  std::uint64_t seed_;
  ParameterSet params_;
  ag::Var embedding_, output_, bias_map_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  Norm encoder_norm_, decoder_norm_;
  mutable std::size_t truncations_ = 0;
};

struct DialogueEpochLog {
  int epoch = 0;
  double loss = 0.0;  // token-weighted mean NLL over the epoch
  double seconds = 0.0;
};

struct DialogueTrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 16;
  int epochs = 10;
  std::uint64_t shuffle_seed = 0;
  std::function<void(const DialogueEpochLog&)> on_epoch;
};

// Throws NumericError on a non-finite loss.
std::vector<DialogueEpochLog> train_dialogue(DialogueModel& model, std::span<const DialogueExample> train,
                                             const DialogueTrainConfig& config);

void save_dialogue_checkpoint(const DialogueModel& model, const std::filesystem::path& path);
DialogueModel load_dialogue_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------- metrics

using TokenSeq = std::vector<int>;

// Corpus BLEU with uniform weights over 1..n, clipped counts, brevity penalty
// on total lengths, and 0.1 added to any zero match count. 0 when the
// hypotheses hold no n-gram of some order.
double corpus_bleu(std::span<const TokenSeq> hypotheses, std::span<const TokenSeq> references, int n);

// Distinct n-grams over total n-grams across the corpus (0 without n-grams).
double distinct_corpus(std::span<const TokenSeq> hypotheses, int n);
// Mean over sentences of the number of distinct n-grams in each sentence.
double distinct_per_sentence(std::span<const TokenSeq> hypotheses, int n);

// exp of the mean per-token NLL.
double perplexity(double total_nll, std::size_t tokens);

// Keys bleu2, bleu3, dist2, dist3, dist4, dist2_sent, dist3_sent, dist4_sent,
// ppl. Hypotheses and references exclude BOS and EOS.
std::map<std::string, double> evaluate_dialogue(std::span<const TokenSeq> hypotheses,
                                                std::span<const TokenSeq> references, double total_nll,
                                                std::size_t tokens);

// Drops a leading BOS and everything from the first EOS on.
TokenSeq strip_specials(std::span<const int> seq);

}  // namespace uccr
