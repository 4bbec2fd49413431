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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "uccr/errors.hpp"
#include "uccr/metrics.hpp"

namespace uccr {
namespace {

using ag::Matrix;

struct TinySetup {
  Corpus corpus;
  Split split;
  std::vector<RecInstance> train, all;

  explicit TinySetup(std::uint64_t seed = 1, GenConfig g = testing::tiny_gen_config()) {
    corpus = synthesize_corpus(g, seed);
    split = chronological_split(corpus, {}, 0, 0);
    train = extract_instances(corpus, split, Part::kTrain);
    all = train;
  }
};

ModelConfig small_config(int d = 8) {
  ModelConfig c;
  c.dim = d;
  return c;
}

TEST(RecModel, EndToEndGradientMatchesFiniteDifferences) {
  TinySetup s;
  ASSERT_EQ(s.corpus.users.size(), 3u);
  ModelConfig c = small_config();
  c.lambda_cl = 0.5;
  c.delta_e = c.delta_w = 0.0;
  UccrModel model(s.corpus, c, 3);
  model.rebuild_snapshots(s.train);
  auto loss = [&] { return model.batch_loss(s.train, true, c.lambda_cl).total; };
  auto r = testing::grad_check(loss, model.params().items());
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
  EXPECT_EQ(r.checked, model.params().scalar_count());
}

TEST(RecModel, ScoresAreDistributions) {
  TinySetup s;
  UccrModel model(s.corpus, small_config(), 1);
  model.rebuild_snapshots(s.train);
  Matrix p = model.score(s.all);
  for (ag::Index i = 0; i < p.rows(); ++i) {
    EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
    EXPECT_GE(p.row(i).minCoeff(), 0.0);
  }
}

TEST(RecModel, UniformPredictorNllIsLogItemCount) {
  TinySetup s;
  UccrModel model(s.corpus, small_config(), 1);
  // Zero item embeddings make every logit 0.
  for (const auto& [name, v] : model.params().items()) {
    if (name.rfind("rgcn.l0", 0) == 0) {
      ag::Var h = v;
      h.mutable_value().setZero();
    }
  }
  model.rebuild_snapshots(s.train);
  LossParts lp = model.batch_loss(s.train, true, 0.0);
  EXPECT_NEAR(lp.nll, std::log(5.0), 1e-12);
}

TEST(RecModel, LookalikeNeedsCurrentSnapshots) {
  TinySetup s;
  UccrModel model(s.corpus, small_config(), 1);
  EXPECT_THROW(model.score(s.all), std::logic_error);
  model.rebuild_snapshots(s.train);
  EXPECT_NO_THROW(model.score(s.all));
  model.set_epoch(model.epoch() + 1);
  EXPECT_THROW(model.score(s.all), std::logic_error);
  EXPECT_EQ(model.snapshots().size(), s.train.size());
}

TEST(RecModel, LookalikeChangesOnlyAfterRebuild) {
  TinySetup s;
  ModelConfig c = small_config();
  c.delta_e = c.delta_w = -1.0;  // every other user's snapshot passes
  UccrModel model(s.corpus, c, 2);
  model.rebuild_snapshots(s.train);
  ag::NoGradGuard guard;
  const RecInstance& inst = s.train.back();
  auto contrib = [&] {
    UccrModel::Batch b(model);
    return model.forward(inst, b).lookalike_entity.value();
  };
  const auto& snap_before = model.snapshots().entries();
  const Matrix before = contrib();
  const Matrix stored = snap_before.front().entity_cur;
  ASSERT_GT(before.norm(), 0.0);
  ag::Var base = model.params().get("rgcn.base");
  base.mutable_value().array() += 0.3;
  EXPECT_EQ(contrib(), before);
  model.rebuild_snapshots(s.train);
  EXPECT_NE(contrib(), before);
  EXPECT_NE(model.snapshots().entries().front().entity_cur, stored);
}

TEST(RecModel, AblationsRemoveParameters) {
  TinySetup s;
  // Later sessions first so the per-user alignment entries carry history.
  std::vector<RecInstance> insts(s.train.rbegin(), s.train.rend());
  std::set<int> used_relations;
  for (const auto& t : s.corpus.kg.triples) used_relations.insert(t.relation);
  auto count = [&](auto tweak) {
    ModelConfig c = small_config();
    c.delta_e = c.delta_w = -1.0;  // open every clip so all paths carry gradient
    tweak(c);
    UccrModel m(s.corpus, c, 1);
    m.rebuild_snapshots(insts);
    LossParts lp = m.batch_loss(insts, true, c.lambda_cl);
    EXPECT_TRUE(std::isfinite(lp.total.scalar()));
    ag::backward(lp.total);
    for (const auto& [name, v] : m.params().items()) {
      if (name.rfind("hist.", 0) == 0 && !c.use_history) continue;  // look-alike query only
      if (name.rfind("rgcn.l0.rel", 0) == 0 && !used_relations.count(std::stoi(name.substr(11)))) continue;
      EXPECT_TRUE(v.has_grad()) << name << " in " << c.to_json();
    }
    return m.params().items().size();
  };
  const auto full = count([](ModelConfig&) {});
  const auto no_en = count([](ModelConfig& c) { c.use_entity = false; });
  const auto no_wo = count([](ModelConfig& c) { c.use_word = false; });
  const auto no_it = count([](ModelConfig& c) { c.use_item = false; });
  const auto no_hist = count([](ModelConfig& c) { c.use_history = false; });
  const auto cur_only = count([](ModelConfig& c) {
    c.use_history = false;
    c.use_lookalike = false;
  });
  EXPECT_LT(no_en, full);
  EXPECT_LT(no_wo, full);
  EXPECT_LT(no_it, full);
  EXPECT_LT(no_hist, full);
  EXPECT_LT(cur_only, no_hist);
  ModelConfig bad = small_config();
  bad.use_entity = bad.use_word = false;
  EXPECT_THROW(UccrModel(s.corpus, bad, 1), ConfigError);
}

TEST(RecModel, CurrentOnlyIgnoresHistory) {
  TinySetup s;
  ModelConfig c = small_config();
  c.use_history = c.use_lookalike = false;
  UccrModel model(s.corpus, c, 1);
  ag::NoGradGuard guard;
  UccrModel::Batch b(model);
  for (const auto& inst : s.train) {
    UserState st = model.forward(inst, b);
    EXPECT_EQ(st.entity_hist.value().norm(), 0.0);
    EXPECT_EQ(st.item_hist.value().norm(), 0.0);
  }
}

TEST(RecModel, FirstSessionHasZeroHistory) {
  TinySetup s;
  UccrModel model(s.corpus, small_config(), 1);
  model.rebuild_snapshots(s.train);
  ag::NoGradGuard guard;
  UccrModel::Batch b(model);
  for (const auto& inst : s.train) {
    UserState st = model.forward(inst, b);
    if (inst.session == 0) {
      EXPECT_EQ(st.entity_hist.value().norm(), 0.0);
      EXPECT_EQ(st.word_hist.value().norm(), 0.0);
      EXPECT_EQ(st.item_hist.value().norm(), 0.0);
      EXPECT_EQ(st.lookalike_entity.value().norm(), 0.0);
      EXPECT_EQ(st.gamma_h, 0.0);
    }
    EXPECT_LE(st.alpha_h, 1.0 / 6.0);
    EXPECT_LE(st.beta_h, 1.0 / 6.0);
    EXPECT_LE(st.gamma_h, 0.15 + 1e-12);
  }
}

TEST(RecTraining, DeterministicAndDecreasing) {
  TinySetup s;
  auto run = [&] {
    UccrModel model(s.corpus, small_config(), 5);
    TrainConfig tc;
    tc.epochs = 15;
    tc.learning_rate = 0.01;
    tc.batch_size = 4;
    tc.shuffle_seed = 5;
    auto logs = train_rec(model, s.train, tc);
    model.rebuild_snapshots(s.train);
    return std::make_pair(logs, report_to_json(evaluate_rec(model, s.train)));
  };
  auto [a, ja] = run();
  auto [b, jb] = run();
  ASSERT_EQ(a.size(), 18u);
  EXPECT_EQ(a.front().phase, "mapper");
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].loss, b[i].loss);
  EXPECT_EQ(ja, jb);
  EXPECT_LT(a.back().nll, a[3].nll);
}

TEST(RecTraining, ZeroEpochsKeepsInitialization) {
  TinySetup s;
  UccrModel model(s.corpus, small_config(), 5);
  const Matrix base = model.params().get("rgcn.base").value();
  TrainConfig tc;
  tc.epochs = 0;
  tc.mapper_epochs = 0;
  EXPECT_TRUE(train_rec(model, s.train, tc).empty());
  EXPECT_EQ(model.params().get("rgcn.base").value(), base);
  tc.batch_size = 0;
  EXPECT_THROW(train_rec(model, s.train, tc), ConfigError);
}

TEST(Checkpoint, RoundTripPreservesScoresToFloatPrecision) {
  TinySetup s;
  auto dir = testing::scratch_dir("ckpt");
  UccrModel model(s.corpus, small_config(), 5);
  model.set_epoch(4);
  save_checkpoint(model, dir / "m.ckpt");
  UccrModel back = load_checkpoint(dir / "m.ckpt", s.corpus);
  EXPECT_EQ(back.epoch(), 4);
  EXPECT_EQ(back.config().to_json(), model.config().to_json());
  model.rebuild_snapshots(s.train);
  back.rebuild_snapshots(s.train);
  EXPECT_LT((model.score(s.all) - back.score(s.all)).cwiseAbs().maxCoeff(), 1e-5);

  Corpus other = synthesize_corpus([] {
    GenConfig g = testing::tiny_gen_config();
    g.num_items = 4;
    return g;
  }(), 1);
  EXPECT_THROW(load_checkpoint(dir / "m.ckpt", other), DataError);
  std::ofstream(dir / "junk.ckpt") << "hello";
  EXPECT_THROW(load_checkpoint(dir / "junk.ckpt", s.corpus), DataError);
}

TEST(ModelConfigTest, JsonRoundTripAndValidation) {
  ModelConfig c;
  c.dim = 17;
  c.use_item = false;
  ModelConfig back = ModelConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_NE(ModelConfig{}.hash(), c.hash());
  EXPECT_THROW(ModelConfig::from_json(R"({"tau_e": 0})"), ConfigError);
  EXPECT_THROW(ModelConfig::from_json(R"({"dim": "x"})"), ConfigError);
}

TEST(Metrics, ClosedForms) {
  auto m = metrics_at_rank(1, default_cutoffs());
  EXPECT_EQ(m["hr@10"], 1.0);
  EXPECT_EQ(m["ndcg@10"], 1.0);
  m = metrics_at_rank(3, default_cutoffs());
  EXPECT_DOUBLE_EQ(m["mrr@10"], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m["ndcg@10"], 0.5);
  m = metrics_at_rank(11, default_cutoffs());
  EXPECT_EQ(m["hr@10"], 0.0);
  EXPECT_EQ(m["hr@50"], 1.0);
}

TEST(Metrics, HandRankingExample) {
  // r = (1, 0); items (2, 0), (0, 1), (1, 1) -> logits (2, 0, 1)
  Matrix scores{{2.0, 0.0, 1.0}};
  EXPECT_EQ(rank_of(scores, 0), 1);
  EXPECT_EQ(rank_of(scores, 2), 2);
  EXPECT_EQ(rank_of(scores, 1), 3);
  Matrix ties{{1.0, 1.0, 1.0}};
  EXPECT_EQ(rank_of(ties, 0), 1);
  EXPECT_EQ(rank_of(ties, 2), 3);
}

TEST(Metrics, MatchBruteForceOracleAndMonotone) {
  Rng rng(12);
  std::uniform_int_distribution<int> size(1, 50);
  for (int t = 0; t < 300; ++t) {
    const int n = size(rng);
    Matrix s = uniform_matrix(1, n, 1.0, rng);
    // Coarse values force ties.
    if (t % 3 == 0) s = (s * 3).array().round().matrix();
    const int label = std::uniform_int_distribution<int>(0, n - 1)(rng);
    auto fast = metrics_at_rank(rank_of(s, label), default_cutoffs());
    auto slow = testing::brute_force_metrics(std::vector<double>(s.data(), s.data() + n), label);
    for (const auto& [k, v] : fast) ASSERT_EQ(v, slow[k]) << k;
    ASSERT_LE(fast["hr@10"], fast["hr@50"]);
    ASSERT_LE(fast["mrr@10"], fast["mrr@50"]);
    ASSERT_LE(fast["ndcg@10"], fast["ndcg@50"]);
  }
}

TEST(Metrics, ReportBucketsCoverEveryInstance) {
  std::vector<RecInstance> insts;
  std::vector<int> ranks;
  for (int n = 0; n < 9; ++n) {
    RecInstance r;
    r.user = n % 2;
    for (int e = 0; e < n; ++e) r.context_entities.push_back(e);
    r.context_entities.push_back(0);  // duplicates do not count
    if (n == 0) r.context_entities.clear();
    insts.push_back(r);
    ranks.push_back(1 + n * 7);
  }
  RankingReport rep = ranking_report(insts, ranks, {true, false});
  std::size_t total = 0;
  for (const auto& row : rep.entity_buckets) total += row.count;
  EXPECT_EQ(total, insts.size());
  EXPECT_EQ(rep.entity_buckets[0].count, 1u);
  EXPECT_EQ(rep.entity_buckets[4].count, 2u);
  EXPECT_EQ(rep.user_cohorts[0].count, 5u);
  RankingReport none = ranking_report({}, {}, {});
  EXPECT_FALSE(none.user_cohorts[0].metrics.has_value());
  EXPECT_NE(report_to_json(none).find("null"), std::string::npos);
  EXPECT_NE(report_to_json(rep).find("\"hr@10\""), std::string::npos);
}

}  // namespace
}  // namespace uccr
