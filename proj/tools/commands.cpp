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

#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "uccr/dialogue.hpp"
#include "uccr/errors.hpp"
#include "uccr/metrics.hpp"
#include "uccr/rec.hpp"

#ifndef UCCR_VERSION
#define UCCR_VERSION "unknown"
#endif

namespace uccr::cli {

using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) throw DataError("cannot write " + path.string());
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

const std::vector<std::string>& rank_keys() {
  static const std::vector<std::string> keys = {"hr@10", "hr@50", "mrr@10", "mrr@50", "ndcg@10", "ndcg@50"};
  return keys;
}

void print_rows(std::ostream& out, const std::string& title, const std::vector<CohortRow>& rows) {
  out << "\n| " << title << " | count";
  for (const auto& k : rank_keys()) out << " | " << k;
  out << " |\n|---|---";
  for (std::size_t i = 0; i < rank_keys().size(); ++i) out << "|---";
  out << "|\n";
  for (const auto& r : rows) {
    out << "| " << r.name << " | " << r.count;
    for (const auto& k : rank_keys()) out << " | " << (r.metrics ? fmt(r.metrics->at(k)) : std::string("null"));
    out << " |\n";
  }
}

void print_report(std::ostream& out, const RankingReport& rep) {
  CohortRow all{"all", rep.count, std::nullopt};
  if (rep.count) all.metrics = rep.overall;
  print_rows(out, "overall", {all});
  print_rows(out, "entities", rep.entity_buckets);
  print_rows(out, "users", rep.user_cohorts);
}

std::optional<Part> parse_part(const std::string& name) {
  if (name == "train") return Part::kTrain;
  if (name == "val") return Part::kVal;
  if (name == "test") return Part::kTest;
  return std::nullopt;
}

Part require_part(const std::string& name) {
  auto p = parse_part(name);
  if (!p) throw ConfigError("unknown part '" + name + "' (train, val, test)");
  return *p;
}

std::string rec_log_line(const EpochLog& l) {
  return "phase=" + l.phase + " epoch=" + std::to_string(l.epoch) + " loss=" + fmt(l.loss, 6) + " nll=" + fmt(l.nll, 6) +
         " align=" + fmt(l.align, 6) + " seconds=" + fmt(l.seconds, 3);
}

void warn_on_hash_mismatch(const Run& run, const ModelConfig& trained) {
  if (run.config_overridden && run.config.model.hash() != trained.hash()) {
    std::cerr << "warning: the [model] section differs from the checkpoint's config (hash " << trained.hash()
              << " vs " << run.config.model.hash() << "); using the checkpoint's\n";
  }
}

}  // namespace

Run open_run(const Common& common, const std::string& command) {
  Run run;
  std::optional<fs::path> file;
  if (common.config_file) file = fs::path(*common.config_file);
  run.config = resolve_run_config(file, common.assignments);
  if (common.seed) run.config.seed = *common.seed;
  run.config_overridden = common.config_file.has_value() || !common.assignments.empty();
  if (common.run_dir) {
    run.dir = *common.run_dir;
  } else {
    const char* root = std::getenv("UCCR_RUN_ROOT");
    run.dir = fs::path(root && *root ? root : "runs") / common.name;
  }
  std::error_code ec;
  fs::create_directories(run.dir, ec);
  if (ec) throw DataError("cannot create run directory " + run.dir.string() + ": " + ec.message());
  write_text(run.dir / (command + ".ini"), to_ini(run.config));
  json stamp{{"command", command},
             {"command_line", common.command_line},
             {"seed", run.config.seed},
             {"version", UCCR_VERSION},
             {"threads", 1}};
  write_text(run.dir / (command + ".run.json"), stamp.dump(2) + "\n");
  return run;
}

fs::path or_default(const std::optional<std::string>& flag, const Run& run, const char* file) {
  return flag ? fs::path(*flag) : run.dir / file;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const Common& common) {
  Run run = open_run(common, "synth");
  Corpus c = synthesize_corpus(run.config.corpus, run.config.seed);
  save_corpus(c, run.dir / "corpus.json");
  std::size_t sessions = 0, turns = 0;
  for (const auto& u : c.users) {
    sessions += u.sessions.size();
    for (const auto& s : u.sessions) turns += s.turns.size();
  }
  json manifest{{"seed", run.config.seed},
                {"version", UCCR_VERSION},
                {"generator", to_ini(run.config)},
                {"counts",
                 {{"users", c.users.size()},
                  {"sessions", sessions},
                  {"turns", turns},
                  {"labels", c.label_count()},
                  {"entities", c.kg.num_entities()},
                  {"items", c.kg.num_items()},
                  {"words", c.lexical.num_words()},
                  {"triples", c.kg.triples.size()}}}};
  write_text(run.dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "corpus: " << c.users.size() << " users, " << sessions << " sessions, " << c.label_count()
            << " labels -> " << (run.dir / "corpus.json").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- split

int cmd_split(const Common& common, const SplitArgs& args) {
  Run run = open_run(common, "split");
  Corpus c = load_corpus(or_default(args.corpus, run, "corpus.json"));
  const auto& s = run.config.split;
  std::vector<std::string> eval;
  if (s.eval_users < 0) {
    for (const auto& u : c.users) {
      if (static_cast<int>(u.sessions.size()) >= s.val_sessions + s.test_sessions) eval.push_back(u.user_id);
    }
  } else {
    eval = sample_eval_users(c, s.eval_users, run.config.seed);
  }
  Split split = chronological_split(c, eval, s.val_sessions, s.test_sessions);
  save_split(split, run.dir / "split.json");
  std::size_t fresh = 0;
  for (const auto& id : split.eval_users) fresh += split.users.at(id).cold_start ? 1 : 0;
  std::cout << "eval users: " << split.eval_users.size() << " (new " << fresh << ", old "
            << split.eval_users.size() - fresh << ")\n";
  for (Part p : {Part::kTrain, Part::kVal, Part::kTest}) {
    std::cout << part_name(p) << " instances: " << extract_instances(c, split, p).size() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- train

namespace {

int train_rec_cmd(const Run& run, const TrainArgs& args) {
  Corpus c = load_corpus(or_default(args.corpus, run, "corpus.json"));
  Split split = load_split(or_default(args.split, run, "split.json"), c);
  auto train = extract_instances(c, split, Part::kTrain, {run.config.model.include_system_mentions});
  UccrModel model(c, run.config.model, run.config.seed);
  std::ofstream log(run.dir / "rec_train_log.txt", std::ios::binary);
  TrainConfig tc = run.config.rec_train_config();
  tc.on_epoch = [&](const EpochLog& l) {
    log << rec_log_line(l) << "\n";
    log.flush();
    std::cout << rec_log_line(l) << "\n";
  };
  train_rec(model, train, tc);
  save_checkpoint(model, run.dir / "rec.ckpt");
  std::cout << "checkpoint -> " << (run.dir / "rec.ckpt").string() << "\n";
  return 0;
}

struct DialData {
  std::vector<DialogueExample> examples;
  int user_dim = 0;
};

// Examples of `part` with r(u) attached when a recommendation checkpoint is
// available (or required).
DialData dialogue_data(const Corpus& c, const Split& split, Part part, int max_context,
                       const std::optional<fs::path>& rec_ckpt, bool rec_required) {
  DialData d;
  std::size_t cut = 0;
  d.examples = extract_dialogue_examples(c, split, part, max_context, &cut);
  if (cut) std::cerr << "warning: " << cut << " contexts were truncated to their last " << max_context << " tokens\n";
  if (rec_ckpt && fs::exists(*rec_ckpt)) {
    UccrModel rec = load_checkpoint(*rec_ckpt, c);
    auto train = extract_instances(c, split, Part::kTrain, {rec.config().include_system_mentions});
    attach_user_representations(d.examples, rec, train);
    d.user_dim = rec.config().dim;
  } else if (rec_required) {
    throw DataError("this dialogue model needs r(u) but no recommendation checkpoint was found");
  } else {
    std::cerr << "warning: no recommendation checkpoint; training without the user bias\n";
  }
  return d;
}

int train_dial_cmd(const Run& run, const TrainArgs& args) {
  Corpus c = load_corpus(or_default(args.corpus, run, "corpus.json"));
  Split split = load_split(or_default(args.split, run, "split.json"), c);
  DialData data = dialogue_data(c, split, Part::kTrain, run.config.dialogue.max_context,
                                or_default(args.rec_checkpoint, run, "rec.ckpt"), false);
  DialogueConfig dc = run.config.dialogue;
  dc.vocab_size = c.token_space() + vocab::kFirstCorpusToken;
  dc.user_dim = data.user_dim;
  DialogueModel model(dc, run.config.seed);
  std::ofstream log(run.dir / "dial_train_log.txt", std::ios::binary);
  DialogueTrainConfig tc = run.config.dial_train_config();
  tc.on_epoch = [&](const DialogueEpochLog& l) {
    const std::string line =
        "epoch=" + std::to_string(l.epoch) + " loss=" + fmt(l.loss, 6) + " seconds=" + fmt(l.seconds, 3);
    log << line << "\n";
    log.flush();
    std::cout << line << "\n";
  };
  train_dialogue(model, data.examples, tc);
  save_dialogue_checkpoint(model, run.dir / "dial.ckpt");
  std::cout << "checkpoint -> " << (run.dir / "dial.ckpt").string() << "\n";
  return 0;
}

}  // namespace

int cmd_train(const Common& common, const TrainArgs& args) {
  if (args.target != "rec" && args.target != "dial") throw ConfigError("train target must be rec or dial");
  Run run = open_run(common, "train-" + args.target);
  return args.target == "rec" ? train_rec_cmd(run, args) : train_dial_cmd(run, args);
}

// ---------------------------------------------------------------- eval

namespace {

int eval_rec_cmd(const Run& run, const EvalArgs& args, Part part) {
  Corpus c = load_corpus(or_default(args.corpus, run, "corpus.json"));
  Split split = load_split(or_default(args.split, run, "split.json"), c);
  UccrModel model = load_checkpoint(or_default(args.checkpoint, run, "rec.ckpt"), c);
  warn_on_hash_mismatch(run, model.config());
  const ContextOptions opts{model.config().include_system_mentions};
  auto train = extract_instances(c, split, Part::kTrain, opts);
  auto insts = extract_instances(c, split, part, opts);
  if (insts.empty()) throw DataError(std::string("no ") + part_name(part) + " instances to evaluate");
  model.rebuild_snapshots(train, insts);
  RankingReport rep = evaluate_rec(model, insts, new_user_mask(c, split));
  const fs::path out = run.dir / (std::string("metrics_rec_") + part_name(part) + ".json");
  write_text(out, report_to_json(rep));
  std::cout << "recommendation metrics on " << part_name(part) << " (" << rep.count << " instances)\n";
  print_report(std::cout, rep);
  std::cout << "\nmetrics -> " << out.string() << "\n";
  return 0;
}

int eval_dial_cmd(const Run& run, const EvalArgs& args, Part part) {
  Corpus c = load_corpus(or_default(args.corpus, run, "corpus.json"));
  Split split = load_split(or_default(args.split, run, "split.json"), c);
  DialogueModel model = load_dialogue_checkpoint(or_default(args.checkpoint, run, "dial.ckpt"));
  const bool needs_rec = model.config().user_dim > 0;
  DialData data = dialogue_data(c, split, part, model.config().max_context,
                                or_default(args.rec_checkpoint, run, "rec.ckpt"), needs_rec);
  if (needs_rec && data.user_dim != model.config().user_dim) {
    throw DataError("recommendation checkpoint width does not match the dialogue model's bias map");
  }
  if (data.examples.empty()) throw DataError(std::string("no ") + part_name(part) + " dialogue examples");
  GenerationConfig gen = run.config.generate;
  std::vector<TokenSeq> hyps, refs;
  double nll = 0.0;
  std::size_t tokens = 0;
  const fs::path dump_path = run.dir / (std::string("generations_") + part_name(part) + ".jsonl");
  std::ofstream dump(dump_path, std::ios::binary);
  for (const auto& ex : data.examples) {
    DialogueExample scored = ex;
    if (!needs_rec) scored.user_repr.resize(0, 0);
    {
      ag::NoGradGuard guard;
      auto [v, n] = model.example_nll(scored);
      nll += v.scalar();
      tokens += n;
    }
    auto out = model.generate(scored.context, scored.user_repr, gen);
    hyps.push_back(strip_specials(out));
    refs.push_back(strip_specials(ex.reference));
    json rec{{"user", c.users[ex.user].user_id},
             {"session", ex.session},
             {"turn", ex.turn},
             {"context", ex.context},
             {"generated", out},
             {"reference", ex.reference}};
    dump << rec.dump() << "\n";
  }
  if (!dump) throw DataError("cannot write " + dump_path.string());
  auto metrics = evaluate_dialogue(hyps, refs, nll, tokens);
  json j(metrics);
  j["count"] = data.examples.size();
  const fs::path out = run.dir / (std::string("metrics_dial_") + part_name(part) + ".json");
  write_text(out, j.dump(2) + "\n");
  std::cout << "dialogue metrics on " << part_name(part) << " (" << data.examples.size() << " responses)\n\n";
  std::cout << "| metric | value |\n|---|---|\n";
  for (const auto& [k, v] : metrics) std::cout << "| " << k << " | " << fmt(v) << " |\n";
  std::cout << "\nmetrics -> " << out.string() << "\ngenerations -> " << dump_path.string() << "\n";
  return 0;
}

}  // namespace

int cmd_eval(const Common& common, const EvalArgs& args) {
  if (args.target != "rec" && args.target != "dial") throw ConfigError("eval target must be rec or dial");
  const Part part = require_part(args.part);
  Run run = open_run(common, "eval-" + args.target);
  return args.target == "rec" ? eval_rec_cmd(run, args, part) : eval_dial_cmd(run, args, part);
}

// ---------------------------------------------------------------- ablate

std::vector<std::vector<std::string>> parse_variants(const std::string& text) {
  static const std::vector<std::string> known = {"-En", "-Wo", "-It", "-historical", "-lookalike"};
  std::vector<std::vector<std::string>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::vector<std::string> switches;
    if (item != "full") {
      std::stringstream parts(item);
      std::string sw;
      while (std::getline(parts, sw, '+')) {
        if (std::find(known.begin(), known.end(), sw) == known.end()) {
          throw ConfigError("unknown ablation switch '" + sw + "' (known: full, -En, -Wo, -It, -historical, -lookalike)");
        }
        switches.push_back(sw);
      }
    }
    out.push_back(switches);
  }
  if (out.empty()) throw ConfigError("no ablation variants given");
  return out;
}

void apply_switches(const std::vector<std::string>& switches, ModelConfig& config) {
  for (const auto& s : switches) {
    if (s == "-En") config.use_entity = false;
    if (s == "-Wo") config.use_word = false;
    if (s == "-It") config.use_item = false;
    if (s == "-historical") config.use_history = false;
    if (s == "-lookalike") config.use_lookalike = false;
  }
  config.validate();
}

int cmd_ablate(const Common& common, const AblateArgs& args) {
  const auto variants = parse_variants(args.variants);
  Run run = open_run(common, "ablate");
  Corpus c = load_corpus(or_default(args.corpus, run, "corpus.json"));
  Split split = load_split(or_default(args.split, run, "split.json"), c);
  json rows = json::array();
  std::ostringstream table;
  table << "| variant | params";
  for (const auto& k : rank_keys()) table << " | " << k;
  table << " |\n|---|---";
  for (std::size_t i = 0; i < rank_keys().size(); ++i) table << "|---";
  table << "|\n";
  for (const auto& switches : variants) {
    std::string name;
    for (const auto& s : switches) name += (name.empty() ? "" : "+") + s;
    if (name.empty()) name = "full";
    ModelConfig mc = run.config.model;
    apply_switches(switches, mc);
    const ContextOptions opts{mc.include_system_mentions};
    auto train = extract_instances(c, split, Part::kTrain, opts);
    auto test = extract_instances(c, split, Part::kTest, opts);
    UccrModel model(c, mc, run.config.seed);
    std::ofstream log(run.dir / ("ablate_" + name + "_log.txt"), std::ios::binary);
    TrainConfig tc = run.config.rec_train_config();
    tc.on_epoch = [&](const EpochLog& l) { log << rec_log_line(l) << "\n"; };
    std::cout << "training " << name << "...\n";
    train_rec(model, train, tc);
    model.rebuild_snapshots(train, test);
    RankingReport rep = evaluate_rec(model, test, new_user_mask(c, split));
    json row{{"variant", name},
             {"params", model.params().scalar_count()},
             {"count", rep.count},
             {"metrics", rep.overall},
             {"report", json::parse(report_to_json(rep))}};
    rows.push_back(row);
    table << "| " << name << " | " << model.params().scalar_count();
    for (const auto& k : rank_keys()) table << " | " << (rep.count ? fmt(rep.overall.at(k)) : std::string("null"));
    table << " |\n";
  }
  write_text(run.dir / "ablation.json", json{{"variants", rows}}.dump(2) + "\n");
  write_text(run.dir / "ablation.md", table.str());
  std::cout << "\n" << table.str();
  return 0;
}

// ---------------------------------------------------------------- report

int cmd_report(const Common& common, const ReportArgs& args) {
  Run run = open_run(common, "report");
  std::vector<fs::path> dirs;
  for (const auto& d : args.run_dirs) dirs.emplace_back(d);
  if (dirs.empty()) dirs.push_back(run.dir);
  std::ostringstream md;
  for (const auto& dir : dirs) {
    if (!fs::is_directory(dir)) throw DataError("not a run directory: " + dir.string());
    md << "# " << dir.string() << "\n";
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string name = f.filename().string();
      auto read = [&] {
        std::ifstream in(f);
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded()) throw DataError("malformed metrics document " + f.string());
        return j;
      };
      if (name.rfind("metrics_rec_", 0) == 0 && f.extension() == ".json") {
        json j = read();
        md << "\n## " << name << " (" << j.at("count").get<std::size_t>() << " instances)\n";
        auto section = [&](const std::string& title, const json& rows) {
          md << "\n| " << title << " | count";
          for (const auto& k : rank_keys()) md << " | " << k;
          md << " |\n|---|---";
          for (std::size_t i = 0; i < rank_keys().size(); ++i) md << "|---";
          md << "|\n";
          for (const auto& [key, row] : rows.items()) {
            md << "| " << key << " | " << row.at("count").get<std::size_t>();
            for (const auto& k : rank_keys()) {
              md << " | " << (row.at("metrics").is_null() ? std::string("null") : fmt(row["metrics"].at(k).get<double>()));
            }
            md << " |\n";
          }
        };
        section("overall", json{{"all", {{"count", j.at("count")}, {"metrics", j.at("overall")}}}});
        section("entities", j.at("entity_buckets"));
        section("users", j.at("user_cohorts"));
      } else if (name.rfind("metrics_dial_", 0) == 0 && f.extension() == ".json") {
        json j = read();
        md << "\n## " << name << "\n\n| metric | value |\n|---|---|\n";
        for (const auto& [k, v] : j.items()) md << "| " << k << " | " << (v.is_number_float() ? fmt(v.get<double>()) : v.dump()) << " |\n";
      } else if (name == "ablation.md") {
        std::ifstream in(f);
        md << "\n## ablation\n\n" << in.rdbuf();
      }
    }
    md << "\n";
  }
  write_text(run.dir / "report.md", md.str());
  std::cout << md.str();
  return 0;
}

}  // namespace uccr::cli
