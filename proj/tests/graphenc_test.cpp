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

#include "uccr/graphenc.hpp"

#include <gtest/gtest.h>

#include <vector>

#include "support/gradcheck.hpp"

namespace uccr {
namespace {

using ag::Matrix;
using ag::Var;

KnowledgeGraph chain_graph(int n) {
  KnowledgeGraph kg;
  for (int i = 0; i < n; ++i) kg.entities.push_back("e" + std::to_string(i));
  kg.relations = {"r0", "r1"};
  for (int i = 0; i + 1 < n; ++i) kg.triples.push_back({i, i % 2, i + 1});
  kg.items = {0};
  return kg;
}

// Identity-weight R-GCN so outputs can be evaluated by hand.
RgcnParameters identity_rgcn(const Matrix& base, int relations) {
  const auto d = base.cols();
  RgcnParameters p;
  p.base = ag::parameter(base);
  p.relation_weights.push_back({});
  for (int r = 0; r < relations; ++r) p.relation_weights[0].push_back(ag::parameter(Matrix::Identity(d, d)));
  p.self_weights.push_back(ag::parameter(Matrix::Identity(d, d)));
  return p;
}

TEST(Rgcn, IsolatedEntityKeepsOnlySelfTerm) {
  KnowledgeGraph kg = chain_graph(2);
  kg.entities.push_back("lonely");
  Matrix base(3, 2);
  base << 1, 2, 3, 4, 5, -6;
  Var out = rgcn_encode(build_relational_adjacency(kg), identity_rgcn(base, 2));
  EXPECT_DOUBLE_EQ(out.value()(2, 0), 5.0);
  EXPECT_DOUBLE_EQ(out.value()(2, 1), 0.0);  // relu
}

TEST(Rgcn, SingleNeighborAddsNeighborVector) {
  KnowledgeGraph kg = chain_graph(2);  // e0 -r0- e1
  Matrix base(2, 2);
  base << 1, 2, 3, 4;
  Var out = rgcn_encode(build_relational_adjacency(kg), identity_rgcn(base, 2));
  EXPECT_DOUBLE_EQ(out.value()(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(out.value()(0, 1), 6.0);
  EXPECT_DOUBLE_EQ(out.value()(1, 0), 4.0);
  EXPECT_DOUBLE_EQ(out.value()(1, 1), 6.0);
}

TEST(Rgcn, NeighborsUnderOneRelationAreAveraged) {
  KnowledgeGraph kg;
  kg.entities = {"hub", "a", "b"};
  kg.relations = {"r"};
  kg.triples = {{0, 0, 1}, {0, 0, 2}};
  kg.items = {0};
  Matrix base(3, 1);
  base << 1, 2, 6;
  Var out = rgcn_encode(build_relational_adjacency(kg), identity_rgcn(base, 1));
  EXPECT_DOUBLE_EQ(out.value()(0, 0), 1.0 + (2.0 + 6.0) / 2.0);
  EXPECT_DOUBLE_EQ(out.value()(1, 0), 2.0 + 1.0);
}

TEST(Rgcn, DuplicateTriplesDoNotDoubleCount) {
  KnowledgeGraph kg = chain_graph(2);
  kg.triples.push_back(kg.triples.front());
  auto adj = build_relational_adjacency(kg);
  EXPECT_DOUBLE_EQ(Matrix(adj.per_relation[0])(0, 1), 1.0);
}

TEST(Rgcn, OutputShapeAndGradient) {
  Rng rng(3);
  KnowledgeGraph kg = chain_graph(6);
  ParameterSet ps;
  auto p = make_rgcn_parameters(6, 2, 8, 1, ps, rng);
  auto adj = build_relational_adjacency(kg);
  Var out = rgcn_encode(adj, p);
  EXPECT_EQ(out.rows(), 6);
  EXPECT_EQ(out.cols(), 8);
  Matrix probe = uniform_matrix(6, 8, 1.0, rng);
  auto r = testing::grad_check([&] { return ag::sum(ag::mul(rgcn_encode(adj, p), ag::constant(probe))); },
                               ps.items());
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Rgcn, OneLayerIsOneHopLocal) {
  Rng rng(5);
  KnowledgeGraph kg = chain_graph(5);
  ParameterSet ps;
  auto p = make_rgcn_parameters(5, 2, 4, 1, ps, rng);
  auto adj = build_relational_adjacency(kg);
  Matrix before = rgcn_encode(adj, p).value();
  p.base.mutable_value().row(4).setConstant(9.0);
  Matrix after = rgcn_encode(adj, p).value();
  EXPECT_EQ(before.row(0), after.row(0));
  EXPECT_EQ(before.row(2), after.row(2));
  // Two layers reach e2 from e4.
  ParameterSet ps2;
  auto p2 = make_rgcn_parameters(5, 2, 4, 2, ps2, rng);
  Matrix b2 = rgcn_encode(adj, p2).value();
  p2.base.mutable_value().row(4).setConstant(9.0);
  Matrix a2 = rgcn_encode(adj, p2).value();
  EXPECT_EQ(b2.row(1), a2.row(1));
}

TEST(Rgcn, RejectsMismatchedTable) {
  Rng rng(1);
  ParameterSet ps;
  auto p = make_rgcn_parameters(4, 2, 4, 1, ps, rng);
  EXPECT_THROW(rgcn_encode(build_relational_adjacency(chain_graph(5)), p), std::invalid_argument);
  EXPECT_THROW(make_rgcn_parameters(4, 2, 4, 0, ps, rng, "x"), std::invalid_argument);
}

TEST(Gcn, TwoConnectedWordsAverage) {
  LexicalGraph lex;
  lex.words = {"a", "b"};
  lex.edges = {{0, 1}};
  GcnParameters p;
  Matrix base(2, 2);
  base << 1, 3, 5, 7;
  p.base = ag::parameter(base);
  p.weights.push_back(ag::parameter(Matrix::Identity(2, 2)));
  Var out = gcn_encode(build_normalized_adjacency(lex), p);
  EXPECT_NEAR(out.value()(0, 0), 3.0, 1e-12);
  EXPECT_NEAR(out.value()(0, 1), 5.0, 1e-12);
  EXPECT_NEAR(out.value()(1, 0), 3.0, 1e-12);
}

TEST(Gcn, NormalizationOracle) {
  LexicalGraph lex;
  lex.words = {"a", "b", "c"};
  lex.edges = {{0, 1}, {1, 2}};
  Matrix a = Matrix(build_normalized_adjacency(lex));
  // degrees with self loops: 2, 3, 2
  EXPECT_NEAR(a(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(a(0, 1), 1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(a(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(a(0, 2), 0.0);
}

TEST(Gcn, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  LexicalGraph lex;
  for (int i = 0; i < 6; ++i) lex.words.push_back("w" + std::to_string(i));
  lex.edges = {{0, 1}, {1, 2}, {3, 4}, {0, 5}};
  ParameterSet ps;
  auto p = make_gcn_parameters(6, 8, 1, ps, rng);
  auto adj = build_normalized_adjacency(lex);
  Matrix probe = uniform_matrix(6, 8, 1.0, rng);
  auto r = testing::grad_check([&] { return ag::sum(ag::mul(gcn_encode(adj, p), ag::constant(probe))); },
                               ps.items());
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

class PoolTest : public ::testing::Test {
 protected:
  Rng rng{21};
  ParameterSet ps;
  AttentionPoolParameters pool = make_attention_pool_parameters(8, ps, rng, "pool");
};

TEST_F(PoolTest, SingleRowGetsFullWeight) {
  Matrix v = uniform_matrix(1, 8, 1.0, rng);
  Matrix w;
  Var out = attention_pool(ag::constant(v), pool, &w);
  EXPECT_DOUBLE_EQ(w(0, 0), 1.0);
  Matrix expected = v * pool.output_map.value().transpose();
  EXPECT_LT((out.value() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(PoolTest, IdenticalRowsShareWeightEqually) {
  Matrix v = uniform_matrix(1, 8, 1.0, rng);
  Matrix rows(2, 8);
  rows << v, v;
  Matrix w;
  attention_pool(ag::constant(rows), pool, &w);
  EXPECT_NEAR(w(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(w(0, 1), 0.5, 1e-15);
}

TEST_F(PoolTest, EmptyInputIsZero) {
  Matrix w;
  Var out = attention_pool(ag::constant(Matrix(0, 8)), pool, &w);
  EXPECT_EQ(out.cols(), 8);
  EXPECT_DOUBLE_EQ(out.value().cwiseAbs().sum(), 0.0);
  EXPECT_EQ(w.cols(), 0);
  Var table = ag::constant(uniform_matrix(5, 8, 1.0, rng));
  EXPECT_DOUBLE_EQ(pool_ids({}, table, pool).value().cwiseAbs().sum(), 0.0);
}

TEST_F(PoolTest, WeightsSumToOneAndArePermutationInvariant) {
  std::uniform_int_distribution<int> len(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const int t = len(rng);
    Matrix rows = uniform_matrix(t, 8, 3.0, rng);
    Matrix w;
    Var out = attention_pool(ag::constant(rows), pool, &w);
    ASSERT_NEAR(w.sum(), 1.0, 1e-12);
    ASSERT_GE(w.minCoeff(), 0.0);
    std::vector<int> perm(t);
    for (int i = 0; i < t; ++i) perm[i] = t - 1 - i;
    Matrix shuffled(t, 8);
    for (int i = 0; i < t; ++i) shuffled.row(i) = rows.row(perm[i]);
    Var out2 = attention_pool(ag::constant(shuffled), pool);
    ASSERT_LT((out.value() - out2.value()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST_F(PoolTest, GradientMatchesFiniteDifferences) {
  Var table = ps.add("table", uniform_matrix(6, 8, 1.0, rng));
  const std::vector<int> ids = {0, 3, 3, 5};
  Matrix probe = uniform_matrix(1, 8, 1.0, rng);
  auto r = testing::grad_check([&] { return ag::sum(ag::mul(pool_ids(ids, table, pool), ag::constant(probe))); },
                               ps.items());
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

}  // namespace
}  // namespace uccr
