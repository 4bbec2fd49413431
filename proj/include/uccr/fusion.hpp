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

// Per-view aspect fusion and the final user representation.

#pragma once

#include <string>

#include "uccr/autograd.hpp"
#include "uccr/params.hpp"

namespace uccr {

// Sigmoid scorer over concat(r_c, r_h): weight 1 x 2d, bias 1 x 1.
struct AspectGateParameters {
  ag::Var weight;
  ag::Var bias;
};
AspectGateParameters make_aspect_gate_parameters(int dim, ParameterSet& params, Rng& rng,
                                                 const std::string& prefix);

struct ViewOutput {
  ag::Var repr;
  ag::Var coefficient;  // 1 x 1 historical coefficient, or gamma_h for the item view
};

// r = r_c + (sigmoid(G[r_c, r_h]) / tau) * r_h + lookalike_scale * lookalike.
// Throws std::invalid_argument when tau <= 0.
ViewOutput aspect_view(const ag::Var& r_c, const ag::Var& r_h, const ag::Var& lookalike,
                       const AspectGateParameters& gate, double tau, double lookalike_scale);

// gamma = max(0, cos(p_h, p_c) - delta), r = gamma * r_h. gamma is 0 when
// either intent has zero norm.
ViewOutput item_view(const ag::Var& r_h, const ag::Var& p_h, const ag::Var& p_c, double delta);

}  // namespace uccr
