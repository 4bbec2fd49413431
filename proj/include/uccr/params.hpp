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

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "uccr/autograd.hpp"

namespace uccr {

using Rng = std::mt19937_64;

// Named, ordered collection of trainable leaves. Insertion order is the
// serialization and optimizer order.
class ParameterSet {
 public:
  ag::Var add(const std::string& name, ag::Matrix init);

  const ag::Var& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<std::pair<std::string, ag::Var>>& items() const { return items_; }

  void zero_grad();
  // Total number of scalar entries.
  std::size_t scalar_count() const;
  // Largest absolute gradient entry, 0 when no gradient has been accumulated.
  double max_abs_grad(const std::string& prefix = "") const;
  bool all_finite() const;

 private:
  std::vector<std::pair<std::string, ag::Var>> items_;
};

// Uniform(-bound, bound) draw of a rows x cols matrix.
ag::Matrix uniform_matrix(ag::Index rows, ag::Index cols, double bound, Rng& rng);
// Fan-in scaled init for a weight mapping `fan_in` inputs.
ag::Matrix fan_in_matrix(ag::Index rows, ag::Index cols, ag::Index fan_in, Rng& rng);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(const ParameterSet& params, AdamOptions options);

  // Applies one update from the gradients currently held by the parameters.
  // Parameters without a gradient are left untouched.
  void step();
  long steps() const { return t_; }

 private:
  std::vector<ag::Var> params_;
  std::vector<ag::Matrix> m_;
  std::vector<ag::Matrix> v_;
  AdamOptions opt_;
  long t_ = 0;
};

}  // namespace uccr
