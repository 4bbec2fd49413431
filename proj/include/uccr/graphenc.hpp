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

// Graph encoders (relational and plain GCN) and self-attentive pooling.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "uccr/autograd.hpp"
#include "uccr/corpus.hpp"
#include "uccr/params.hpp"

namespace uccr {

// Per-relation neighbor operators A_r with A_r(e, e') = 1 / |N_e^r| for every
// neighbor e' of e under r. A triple <h, r, t> makes h and t neighbors of
// each other under r.
struct RelationalAdjacency {
  int num_entities = 0;
  std::vector<ag::SparseMatrix> per_relation;
};
RelationalAdjacency build_relational_adjacency(const KnowledgeGraph& kg);

struct RgcnParameters {
  ag::Var base;                                        // |E| x d
  std::vector<std::vector<ag::Var>> relation_weights;  // [layer][relation], d x d
  std::vector<ag::Var> self_weights;                   // [layer], d x d

  int layers() const { return static_cast<int>(self_weights.size()); }
};
RgcnParameters make_rgcn_parameters(int num_entities, int num_relations, int dim, int layers,
                                    ParameterSet& params, Rng& rng, const std::string& prefix = "rgcn");

// v^{l+1}_e = relu(sum_r sum_{e' in N_e^r} W_r v^l_{e'} / |N_e^r| + W v^l_e),
// returns the last layer as an |E| x d table.
ag::Var rgcn_encode(const RelationalAdjacency& graph, const RgcnParameters& params);

// D^{-1/2} (A + I) D^{-1/2} over the undirected lexical graph.
ag::SparseMatrix build_normalized_adjacency(const LexicalGraph& lexical);

struct GcnParameters {
  ag::Var base;                  // |W| x d
  std::vector<ag::Var> weights;  // [layer], d x d

  int layers() const { return static_cast<int>(weights.size()); }
};
GcnParameters make_gcn_parameters(int num_words, int dim, int layers, ParameterSet& params, Rng& rng,
                                  const std::string& prefix = "gcn");

// H^{l+1} = relu(norm_adj * H^l * W^T).
ag::Var gcn_encode(const ag::SparseMatrix& norm_adj, const GcnParameters& params);

struct AttentionPoolParameters {
  ag::Var score_vector;  // 1 x d
  ag::Var score_matrix;  // d x d
  ag::Var output_map;    // d x d, linear F
};
AttentionPoolParameters make_attention_pool_parameters(int dim, ParameterSet& params, Rng& rng,
                                                       const std::string& prefix);

// Self-attentive pooling of the rows of `rows` (t x d):
//   mu  = softmax(b . tanh(W v_i))   over i = 1..t
//   out = F(sum_i mu_i v_i)
// An empty input (t = 0) yields the zero vector. When `weights` is given it
// receives mu as a 1 x t row (empty for t = 0).
ag::Var attention_pool(const ag::Var& rows, const AttentionPoolParameters& params,
                       ag::Matrix* weights = nullptr);

// Gathers the given table rows and pools them.
ag::Var pool_ids(std::span<const int> ids, const ag::Var& table, const AttentionPoolParameters& params);

}  // namespace uccr
