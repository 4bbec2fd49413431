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

// Run configuration: defaults, overridden by an INI file, overridden by
// `section.key=value` assignments.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uccr/corpus.hpp"
#include "uccr/dialogue.hpp"
#include "uccr/rec.hpp"

namespace uccr {

struct SplitSettings {
  int eval_users = -1;  // -1: every user
  int val_sessions = 1;
  int test_sessions = 1;
};

struct RecTrainSettings {
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 25;
  int mapper_epochs = 3;
};

struct DialTrainSettings {
  double learning_rate = 1e-3;
  int batch_size = 16;
  int epochs = 10;
};

struct RunConfig {
  std::uint64_t seed = 0;
  GenConfig corpus;
  SplitSettings split;
  ModelConfig model;
  RecTrainSettings train;
  DialogueConfig dialogue;  // vocab_size and user_dim come from the data
  DialTrainSettings dial_train;
  GenerationConfig generate;

  TrainConfig rec_train_config() const;
  DialogueTrainConfig dial_train_config() const;
};

// Throws ConfigError on unknown sections or keys, unparsable values, or
// values the module validators reject.
RunConfig resolve_run_config(const std::optional<std::filesystem::path>& file,
                             const std::vector<std::string>& assignments);
RunConfig parse_run_config(const std::string& ini_text, const std::vector<std::string>& assignments = {});

// Every key with its resolved value; parse_run_config(to_ini(c)) == c.
std::string to_ini(const RunConfig& config);

}  // namespace uccr
