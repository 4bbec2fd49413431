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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "uccr/config.hpp"

namespace uccr::cli {

namespace fs = std::filesystem;

// Options shared by every command.
struct Common {
  std::optional<std::string> config_file;
  std::vector<std::string> assignments;
  std::optional<std::string> run_dir;
  std::string name = "default";
  std::optional<std::uint64_t> seed;
  std::string command_line;
};

// Resolved run: directory created, config persisted.
struct Run {
  fs::path dir;
  RunConfig config;
  bool config_overridden = false;  // a config file or assignment was given
};

Run open_run(const Common& common, const std::string& command);

// Paths default to files inside the run directory.
fs::path or_default(const std::optional<std::string>& flag, const Run& run, const char* file);

struct SplitArgs {
  std::optional<std::string> corpus;
};
struct TrainArgs {
  std::string target;  // rec | dial
  std::optional<std::string> corpus, split, rec_checkpoint;
};
struct EvalArgs {
  std::string target;
  std::optional<std::string> corpus, split, checkpoint, rec_checkpoint;
  std::string part = "test";
};
struct AblateArgs {
  std::optional<std::string> corpus, split;
  std::string variants = "full,-En,-Wo,-It,-historical,-lookalike";
};
struct ChatArgs {
  std::optional<std::string> corpus, split, rec_checkpoint, dial_checkpoint, input, user;
};
struct ReportArgs {
  std::vector<std::string> run_dirs;
};

int cmd_synth(const Common& common);
int cmd_split(const Common& common, const SplitArgs& args);
int cmd_train(const Common& common, const TrainArgs& args);
int cmd_eval(const Common& common, const EvalArgs& args);
int cmd_ablate(const Common& common, const AblateArgs& args);
int cmd_chat(const Common& common, const ChatArgs& args, std::istream& in, std::ostream& out);
int cmd_report(const Common& common, const ReportArgs& args);

// Parses "full,-En,-historical+-lookalike" into switch lists; throws
// ConfigError on an unknown switch.
std::vector<std::vector<std::string>> parse_variants(const std::string& text);
void apply_switches(const std::vector<std::string>& switches, ModelConfig& config);

}  // namespace uccr::cli
