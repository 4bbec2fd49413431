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

#include <cmath>
#include <set>
#include <stdexcept>

namespace uccr {
namespace {

void check_square(const ag::Var& w, ag::Index d, const char* what) {
  if (w.rows() != d || w.cols() != d) {
    throw std::invalid_argument(std::string(what) + " must be " + std::to_string(d) + "x" +
                                std::to_string(d));
  }
}

}  // namespace

RelationalAdjacency build_relational_adjacency(const KnowledgeGraph& kg) {
  RelationalAdjacency out;
  out.num_entities = kg.num_entities();
  const int n = out.num_entities;
  std::vector<std::vector<std::set<int>>> nbrs(kg.relations.size(), std::vector<std::set<int>>(n));
  for (const auto& t : kg.triples) {
    if (t.head == t.tail) {
      nbrs[t.relation][t.head].insert(t.tail);
      continue;
    }
    nbrs[t.relation][t.head].insert(t.tail);
    nbrs[t.relation][t.tail].insert(t.head);
  }
  for (const auto& rel : nbrs) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int e = 0; e < n; ++e) {
      const double z = static_cast<double>(rel[e].size());
      for (int nb : rel[e]) trips.emplace_back(e, nb, 1.0 / z);
    }
    ag::SparseMatrix a(n, n);
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();
    out.per_relation.push_back(std::move(a));
  }
  return out;
}

RgcnParameters make_rgcn_parameters(int num_entities, int num_relations, int dim, int layers,
                                    ParameterSet& params, Rng& rng, const std::string& prefix) {
  if (layers < 1) throw std::invalid_argument("R-GCN needs at least one layer");
  RgcnParameters p;
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  p.base = params.add(prefix + ".base", uniform_matrix(num_entities, dim, bound, rng));
  for (int l = 0; l < layers; ++l) {
    std::vector<ag::Var> rel;
    for (int r = 0; r < num_relations; ++r) {
      rel.push_back(params.add(prefix + ".l" + std::to_string(l) + ".rel" + std::to_string(r),
                               fan_in_matrix(dim, dim, dim, rng)));
    }
    p.relation_weights.push_back(std::move(rel));
    p.self_weights.push_back(
        params.add(prefix + ".l" + std::to_string(l) + ".self", fan_in_matrix(dim, dim, dim, rng)));
  }
  return p;
}

ag::Var rgcn_encode(const RelationalAdjacency& graph, const RgcnParameters& params) {
  if (params.layers() < 1) throw std::invalid_argument("R-GCN needs at least one layer");
  if (params.base.rows() != graph.num_entities) {
    throw std::invalid_argument("R-GCN base table rows do not match the entity count");
  }
  const ag::Index d = params.base.cols();
  ag::Var h = params.base;
  for (int l = 0; l < params.layers(); ++l) {
    if (params.relation_weights[l].size() != graph.per_relation.size()) {
      throw std::invalid_argument("R-GCN relation weight count does not match the graph");
    }
    check_square(params.self_weights[l], d, "R-GCN self weight");
    ag::Var acc = ag::matmul_nt(h, params.self_weights[l]);
    for (std::size_t r = 0; r < graph.per_relation.size(); ++r) {
      if (graph.per_relation[r].nonZeros() == 0) continue;
      check_square(params.relation_weights[l][r], d, "R-GCN relation weight");
      acc = acc + ag::matmul_nt(ag::spmm(graph.per_relation[r], h), params.relation_weights[l][r]);
    }
    h = ag::relu(acc);
  }
  return h;
}

ag::SparseMatrix build_normalized_adjacency(const LexicalGraph& lexical) {
  const int n = lexical.num_words();
  std::vector<std::set<int>> nbrs(n);
  for (int i = 0; i < n; ++i) nbrs[i].insert(i);
  for (const auto& [a, b] : lexical.edges) {
    nbrs[a].insert(b);
    nbrs[b].insert(a);
  }
  std::vector<double> inv_sqrt_deg(n);
  for (int i = 0; i < n; ++i) inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(nbrs[i].size()));
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < n; ++i) {
    for (int j : nbrs[i]) trips.emplace_back(i, j, inv_sqrt_deg[i] * inv_sqrt_deg[j]);
  }
  ag::SparseMatrix a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

GcnParameters make_gcn_parameters(int num_words, int dim, int layers, ParameterSet& params, Rng& rng,
                                  const std::string& prefix) {
  if (layers < 1) throw std::invalid_argument("GCN needs at least one layer");
  GcnParameters p;
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  p.base = params.add(prefix + ".base", uniform_matrix(num_words, dim, bound, rng));
  for (int l = 0; l < layers; ++l) {
    p.weights.push_back(
        params.add(prefix + ".l" + std::to_string(l) + ".weight", fan_in_matrix(dim, dim, dim, rng)));
  }
  return p;
}

ag::Var gcn_encode(const ag::SparseMatrix& norm_adj, const GcnParameters& params) {
  if (params.layers() < 1) throw std::invalid_argument("GCN needs at least one layer");
  if (norm_adj.rows() != params.base.rows()) {
    throw std::invalid_argument("GCN base table rows do not match the word count");
  }
  ag::Var h = params.base;
  for (const auto& w : params.weights) {
    check_square(w, params.base.cols(), "GCN weight");
    h = ag::relu(ag::matmul_nt(ag::spmm(norm_adj, h), w));
  }
  return h;
}

AttentionPoolParameters make_attention_pool_parameters(int dim, ParameterSet& params, Rng& rng,
                                                       const std::string& prefix) {
  AttentionPoolParameters p;
  p.score_vector = params.add(prefix + ".b", fan_in_matrix(1, dim, dim, rng));
  p.score_matrix = params.add(prefix + ".W", fan_in_matrix(dim, dim, dim, rng));
  p.output_map = params.add(prefix + ".F", fan_in_matrix(dim, dim, dim, rng));
  return p;
}

ag::Var attention_pool(const ag::Var& rows, const AttentionPoolParameters& params, ag::Matrix* weights) {
  const ag::Index d = params.output_map.rows();
  if (rows.cols() != params.score_matrix.cols() || params.score_vector.cols() != params.score_matrix.rows() ||
      params.output_map.cols() != rows.cols()) {
    throw std::invalid_argument("attention_pool dimension mismatch");
  }
  if (rows.rows() == 0) {
    if (weights) weights->resize(1, 0);
    return ag::zeros(1, d);
  }
  ag::Var scores = ag::matmul_nt(params.score_vector, ag::tanh(ag::matmul_nt(rows, params.score_matrix)));
  ag::Var mu = ag::softmax_rows(scores);
  if (weights) *weights = mu.value();
  return ag::matmul_nt(ag::matmul(mu, rows), params.output_map);
}

ag::Var pool_ids(std::span<const int> ids, const ag::Var& table, const AttentionPoolParameters& params) {
  if (ids.empty()) return ag::zeros(1, params.output_map.rows());
  return attention_pool(ag::gather_rows(table, ids), params);
}

}  // namespace uccr
