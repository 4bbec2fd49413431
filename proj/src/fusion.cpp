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

#include "uccr/fusion.hpp"

#include <stdexcept>

namespace uccr {

AspectGateParameters make_aspect_gate_parameters(int dim, ParameterSet& params, Rng& rng,
                                                 const std::string& prefix) {
  AspectGateParameters p;
  p.weight = params.add(prefix + ".weight", fan_in_matrix(1, 2 * dim, 2 * dim, rng));
  p.bias = params.add(prefix + ".bias", ag::Matrix::Zero(1, 1));
  return p;
}

ViewOutput aspect_view(const ag::Var& r_c, const ag::Var& r_h, const ag::Var& lookalike,
                       const AspectGateParameters& gate, double tau, double lookalike_scale) {
  if (!(tau > 0.0)) throw std::invalid_argument("aspect divisor tau must be > 0");
  const ag::Var parts[] = {r_c, r_h};
  ag::Var logit = ag::matmul_nt(ag::concat_cols(parts), gate.weight) + gate.bias;
  ag::Var coef = ag::scale(ag::sigmoid(logit), 1.0 / tau);
  ag::Var out = r_c + ag::mul_scalar(r_h, coef);
  if (lookalike_scale != 0.0) out = out + lookalike_scale * lookalike;
  return {out, coef};
}

ViewOutput item_view(const ag::Var& r_h, const ag::Var& p_h, const ag::Var& p_c, double delta) {
  if (p_h.value().squaredNorm() == 0.0 || p_c.value().squaredNorm() == 0.0) {
    return {ag::zeros(1, r_h.cols()), ag::zeros(1, 1)};
  }
  ag::Var gamma = ag::relu(ag::add_scalar(ag::cosine(p_h, p_c), -delta));
  return {ag::mul_scalar(r_h, gamma), gamma};
}

}  // namespace uccr
