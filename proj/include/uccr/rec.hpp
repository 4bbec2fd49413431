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

// Multi-aspect recommendation model: representation assembly, item scoring,
// joint training, and checkpoints.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "uccr/autograd.hpp"
#include "uccr/corpus.hpp"
#include "uccr/fusion.hpp"
#include "uccr/graphenc.hpp"
#include "uccr/lookalike.hpp"
#include "uccr/mapper.hpp"
#include "uccr/params.hpp"

namespace uccr {

struct ModelConfig {
  int dim = 128;
  int layers = 1;
  double lambda_e = 0.1;  // historical entity aggregation temperature
  double lambda_i = 0.1;  // historical item aggregation temperature
  double lambda_a = 0.1;  // negative-pair weight in the alignment loss
  double lambda_cl = 0.025;
  double tau_e = 6.0;
  double tau_w = 6.0;
  double delta_e = 0.85;  // also the item-view threshold
  double delta_w = 0.85;
  double alpha_s = 1.0;
  double beta_s = 1.0;
  // View switches.
  bool use_entity = true;
  bool use_word = true;
  bool use_item = true;
  // Aspect switches. Without history the historical vectors still feed the
  // look-alike query when use_lookalike is on.
  bool use_history = true;
  bool use_lookalike = true;
  bool include_system_mentions = true;

  // Throws ConfigError.
  void validate() const;
  std::string to_json() const;  // compact, sorted keys
  static ModelConfig from_json(const std::string& text);
  // FNV-1a of to_json().
  std::uint64_t hash() const;
};

// Everything computed for one instance. Absent parts are 1 x d zeros.
struct UserState {
  ag::Var logits;  // 1 x |I|
  ag::Var r;
  ag::Var entity_cur, entity_hist, word_cur, word_hist, item_hist;
  ag::Var intent_cur, intent_hist;
  ag::Var lookalike_entity, lookalike_word;
  double alpha_h = 0.0, beta_h = 0.0, gamma_h = 0.0;
};

struct LossParts {
  ag::Var total;
  double nll = 0.0;    // mean over instances
  double align = 0.0;  // summed over tasks
};

class UccrModel {
 public:
  UccrModel(const Corpus& corpus, ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Corpus& corpus() const { return *corpus_; }
  std::uint64_t seed() const { return seed_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // Per-batch cache of encoded tables and historical session vectors. Build
  // a fresh one after every parameter update.
  class Batch {
   public:
    explicit Batch(const UccrModel& model);

   private:
    friend class UccrModel;
    struct SessionVecs {
      std::optional<ag::Var> entity, word, item;
    };
    const SessionVecs& session(const UccrModel& m, int user, int session_pos);

    ag::Var entities_;
    std::optional<ag::Var> words_;
    ag::Var items_;
    std::map<std::pair<int, int>, SessionVecs> sessions_;
  };

  UserState forward(const RecInstance& inst, Batch& batch) const;

  // mean NLL (when with_nll) + align_weight * sum of task alignment losses.
  LossParts batch_loss(std::span<const RecInstance> batch, bool with_nll, double align_weight) const;

  // Alignment batches for the active tasks, one user per batch entry.
  std::vector<AlignmentBatch> alignment_tasks(std::span<const UserState> states,
                                              std::span<const RecInstance> insts) const;

  // Item probabilities for each instance, rows aligned with `insts`.
  ag::Matrix score(std::span<const RecInstance> insts) const;

  // Recomputes the look-alike store from the training instances, tags it
  // with the current epoch, and freezes the look-alike vectors of every
  // training instance and every instance in `queries`. Until the next
  // rebuild those vectors stay fixed whatever the parameters do; instances
  // not frozen here get a contribution computed from their live query. No-op
  // without the look-alike aspect.
  void rebuild_snapshots(std::span<const RecInstance> train, std::span<const RecInstance> queries = {});
  const SnapshotStore& snapshots() const { return store_; }
  long epoch() const { return epoch_; }
  void set_epoch(long epoch) { epoch_ = epoch; }

 private:
  const Corpus* corpus_;
  ModelConfig config_;
  std::uint64_t seed_;
  ParameterSet params_;
  ContextOptions context_;

  RelationalAdjacency kg_adj_;
  ag::SparseMatrix word_adj_;
  RgcnParameters rgcn_;
  std::optional<GcnParameters> gcn_;
  std::optional<AttentionPoolParameters> entity_pool_, word_pool_, item_pool_;
  std::optional<ag::Var> hist_word_map_, entity_bilinear_, item_bilinear_, intent_gate_, fuse_gate_;
  std::optional<AspectGateParameters> entity_aspect_, word_aspect_;

  struct FrozenLookalike {
    ag::Matrix entity, word;
  };
  void lookalike_for(const RecInstance& inst, UserState& st) const;

  SnapshotStore store_;
  std::map<std::tuple<int, int, int>, FrozenLookalike> frozen_;
  long epoch_ = 0;
};

struct EpochLog {
  std::string phase;  // "mapper" or "joint"
  int epoch = 0;      // 1-based within the phase
  double loss = 0.0;  // mean over batches
  double nll = 0.0;
  double align = 0.0;
  double seconds = 0.0;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 25;
  int mapper_epochs = 3;
  std::uint64_t shuffle_seed = 0;
  std::function<void(const EpochLog&)> on_epoch;
};

// Mapper pretraining on the alignment loss, then joint epochs. Snapshots are
// rebuilt at the start of every epoch. Throws NumericError on a non-finite
// loss.
std::vector<EpochLog> train_rec(UccrModel& model, std::span<const RecInstance> train,
                                const TrainConfig& config);

// Binary container: magic line, JSON header, float32 parameter data.
void save_checkpoint(const UccrModel& model, const std::filesystem::path& path);
// The corpus must match the one the model was trained on in every table size.
UccrModel load_checkpoint(const std::filesystem::path& path, const Corpus& corpus);

}  // namespace uccr
