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

// uccr: synth | split | train | eval | ablate | chat | report
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "uccr/errors.hpp"

namespace {

using namespace uccr::cli;

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_file, "INI config file");
  app->add_option("--set", c.assignments, "Override section.key=value (repeatable)");
  app->add_option("-r,--run-dir", c.run_dir, "Run directory (default $UCCR_RUN_ROOT/<name>)");
  app->add_option("-n,--name", c.name, "Run name under $UCCR_RUN_ROOT (or ./runs)");
  app->add_option("-s,--seed", c.seed, "Seed, overrides run.seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-aspect user modeling for conversational recommendation"};
  app.require_subcommand(1);
  Common common;
  for (int i = 0; i < argc; ++i) common.command_line += (i ? " " : "") + std::string(argv[i]);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-session corpus");
  add_common(synth, common);

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Chronological train/val/test split");
  add_common(split, common);
  split->add_option("--corpus", split_args.corpus, "Corpus file (default <run>/corpus.json)");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train the recommender (rec) or the dialogue model (dial)");
  add_common(train, common);
  train->add_option("target", train_args.target, "rec or dial")->required()->check(CLI::IsMember({"rec", "dial"}));
  train->add_option("--corpus", train_args.corpus, "Corpus file");
  train->add_option("--split", train_args.split, "Split file");
  train->add_option("--rec-checkpoint", train_args.rec_checkpoint, "Recommendation checkpoint providing r(u)");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, common);
  eval->add_option("target", eval_args.target, "rec or dial")->required()->check(CLI::IsMember({"rec", "dial"}));
  eval->add_option("--corpus", eval_args.corpus, "Corpus file");
  eval->add_option("--split", eval_args.split, "Split file");
  eval->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint to evaluate");
  eval->add_option("--rec-checkpoint", eval_args.rec_checkpoint, "Recommendation checkpoint providing r(u)");
  eval->add_option("--part", eval_args.part, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));

  AblateArgs ablate_args;
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate ablated variants");
  add_common(ablate, common);
  ablate->add_option("--corpus", ablate_args.corpus, "Corpus file");
  ablate->add_option("--split", ablate_args.split, "Split file");
  ablate->add_option("--variants", ablate_args.variants,
                     "Comma-separated variants; switches -En -Wo -It -historical -lookalike joined by '+'");

  ChatArgs chat_args;
  auto* chat = app.add_subcommand("chat", "Interactive demo session");
  add_common(chat, common);
  chat->add_option("--corpus", chat_args.corpus, "Corpus file");
  chat->add_option("--split", chat_args.split, "Split file (look-alike pool)");
  chat->add_option("--rec-checkpoint", chat_args.rec_checkpoint, "Recommendation checkpoint");
  chat->add_option("--dial-checkpoint", chat_args.dial_checkpoint, "Dialogue checkpoint");
  chat->add_option("--user", chat_args.user, "Continue as this corpus user (default: a new user)");
  chat->add_option("--input", chat_args.input, "Read lines from this file instead of stdin");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Summarize metrics documents as tables");
  add_common(report, common);
  report->add_option("dirs", report_args.run_dirs, "Run directories to summarize (default: the run directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(common);
    if (split->parsed()) return cmd_split(common, split_args);
    if (train->parsed()) return cmd_train(common, train_args);
    if (eval->parsed()) return cmd_eval(common, eval_args);
    if (ablate->parsed()) return cmd_ablate(common, ablate_args);
    if (chat->parsed()) {
      if (chat_args.input) {
        std::ifstream in(*chat_args.input);
        if (!in) throw uccr::DataError("cannot read " + *chat_args.input);
        return cmd_chat(common, chat_args, in, std::cout);
      }
      return cmd_chat(common, chat_args, std::cin, std::cout);
    }
    if (report->parsed()) return cmd_report(common, report_args);
  } catch (const uccr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const uccr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const uccr::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
