/*
 * Copyright 2026 The miverify Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "miverify/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "miverify/dataset_io.hpp"
#include "miverify/embed/embed_model.hpp"
#include "miverify/errors.hpp"
#include "miverify/harness/experiment.hpp"
#include "miverify/harness/synthetic.hpp"
#include "miverify/odm/outlier_model.hpp"

namespace miverify::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// Writes through `fallback` when `path` is empty.
template <class Fn>
void write_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  fn(f);
  if (!f) throw Error("write failed: " + path);
}

void log_resolved(std::ostream& err, std::string_view sub, const json& config,
                  std::uint64_t seed) {
  err << "miverify " << sub << ": seed=" << seed << " config=" << config.dump() << '\n';
}

std::vector<double> read_scores(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<double> scores;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      scores.push_back(json::parse(line).at("iccs").get<double>());
    } catch (const json::exception& e) {
      throw FormatError(lineno, e.what());
    }
  }
  return scores;
}

// Flag values a subcommand may read; CLI11 binds into these.
struct Flags {
  std::string in, out, out_dir, config, spec, model, odm, scores, val;
  std::string model_kind, odm_kind;
  std::optional<std::uint64_t> seed;
  std::optional<double> tamper_rate;
  std::optional<double> train_fraction, val_fraction, test_fraction;
  std::optional<int> epochs;
  bool timing = false;
};

int cmd_validate(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto ds = data::load_dataset(f.in);
  const auto violations = data::validate_dataset(ds);
  for (const auto& v : violations) {
    out << json{{"package_id", v.package_id}, {"rule", v.rule}}.dump() << '\n';
  }
  err << "miverify validate: " << ds.size() << " packages, " << violations.size()
      << " violations\n";
  return violations.empty() ? kExitOk : kExitValidation;
}

int cmd_split(const Flags& f, std::ostream& out, std::ostream& err) {
  json cfg = f.config.empty() ? json::object() : read_json_file(f.config);
  if (f.train_fraction) cfg["train"] = *f.train_fraction;
  if (f.val_fraction) cfg["val"] = *f.val_fraction;
  if (f.test_fraction) cfg["test"] = *f.test_fraction;
  if (f.seed) cfg["seed"] = *f.seed;
  data::SplitSpec spec;
  for (const auto& [k, v] : cfg.items()) {
    if (k == "train") {
      spec.train_fraction = v.get<double>();
    } else if (k == "val") {
      spec.val_fraction = v.get<double>();
    } else if (k == "test") {
      spec.test_fraction = v.get<double>();
    } else if (k == "seed") {
      spec.seed = v.get<std::uint64_t>();
    } else {
      throw ConfigError("unknown split key '" + k + "'");
    }
  }
  spec.check();
  log_resolved(err, "split",
               {{"train", spec.train_fraction}, {"val", spec.val_fraction}, {"test", spec.test_fraction}},
               spec.seed);
  const auto ds = data::load_dataset(f.in);
  data::require_valid(ds);
  const auto s = data::split_dataset(ds, spec);
  const fs::path dir = f.out_dir;
  fs::create_directories(dir);
  data::save_dataset(s.train, dir / "train.ndjson");
  data::save_dataset(s.val, dir / "val.ndjson");
  data::save_dataset(s.test, dir / "test.ndjson");
  out << json{{"train", s.train.size()}, {"val", s.val.size()}, {"test", s.test.size()}}.dump()
      << '\n';
  return kExitOk;
}

int cmd_tamper(const Flags& f, std::ostream& out, std::ostream& err) {
  const double rate = f.tamper_rate.value_or(0.5);
  const std::uint64_t seed = f.seed.value_or(0);
  log_resolved(err, "tamper", {{"tamper_rate", rate}}, seed);
  const auto ds = data::load_dataset(f.in);
  data::require_valid(ds);
  const auto t = data::tamper(ds, rate, seed);
  write_output(f.out, out, [&](std::ostream& o) { data::write_dataset(t, o); });
  return kExitOk;
}

int cmd_train(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto kind = embed::parse_model_kind(f.model_kind);
  json cfg = f.config.empty() ? json::object() : read_json_file(f.config);
  if (!cfg.is_object()) throw ConfigError("model config must be a JSON object");
  if (!cfg.contains("train")) cfg["train"] = json::object();
  if (f.seed) cfg["train"]["seed"] = *f.seed;
  if (f.epochs) cfg["train"]["epochs"] = *f.epochs;
  log_resolved(err, "train-embed", cfg, cfg["train"].value("seed", std::uint64_t{0}));
  const auto rd = data::with_labels(data::load_dataset(f.in), data::Label::kClean);
  data::require_valid(rd);
  std::optional<data::FeatureDataset> val;
  if (!f.val.empty()) val = data::load_dataset(f.val);
  const auto model = embed::train_model(kind, rd, cfg, val ? &*val : nullptr);
  embed::save_model(*model, f.out);
  const auto& hist = model->loss_history();
  out << json{{"model", std::string(embed::to_string(kind))},
              {"epochs_run", hist.size()},
              {"final_loss", hist.empty() ? 0.0 : hist.back()},
              {"path", f.out}}
             .dump()
      << '\n';
  return kExitOk;
}

int cmd_score(const Flags& f, std::ostream& out, std::ostream&) {
  const auto model = embed::load_model(f.model);
  const auto ds = data::load_dataset(f.in);
  data::require_valid(ds);
  const auto scores = model->score(ds);
  write_output(f.out, out, [&](std::ostream& o) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      o << json{{"package_id", ds.packages[i].package_id}, {"iccs", scores[i]}}.dump() << '\n';
    }
  });
  return kExitOk;
}

int cmd_fit_odm(const Flags& f, std::ostream& out, std::ostream& err) {
  odm::OdmConfig base;
  base.kind = odm::parse_odm_kind(f.odm_kind);
  json cfg = f.config.empty() ? json::object() : read_json_file(f.config);
  if (f.seed) cfg["seed"] = *f.seed;
  cfg["kind"] = std::string(odm::to_string(base.kind));
  const auto config = odm::odm_config_from_json(cfg, base);
  log_resolved(err, "fit-odm", odm::to_json(config), config.seed);

  std::vector<double> scores;
  if (!f.scores.empty()) {
    if (!f.model.empty() || !f.in.empty()) throw ConfigError("give either --scores or --model with --in");
    scores = read_scores(f.scores);
  } else {
    if (f.model.empty() || f.in.empty()) throw ConfigError("fit-odm needs --scores or --model and --in");
    const auto model = embed::load_model(f.model);
    const auto rd = data::load_dataset(f.in);
    data::require_valid(rd);
    scores = model->score(rd);
  }
  const auto detector = odm::odm_fit_on_scores(scores, config);
  odm::save_odm(detector, f.out);
  out << json{{"odm", std::string(odm::to_string(config.kind))},
              {"n_train", scores.size()},
              {"path", f.out}}
             .dump()
      << '\n';
  return kExitOk;
}

int cmd_assess(const Flags& f, std::ostream& out, std::ostream&) {
  const auto model = embed::load_model(f.model);
  const auto detector = odm::load_odm(f.odm);
  const auto ds = data::load_dataset(f.in);
  data::require_valid(ds);
  const auto scores = model->score(ds);
  const auto preds = detector.predict_all(scores);
  write_output(f.out, out, [&](std::ostream& o) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      o << json{{"package_id", ds.packages[i].package_id},
                {"iccs", scores[i]},
                {"verdict", std::string(odm::to_string(preds[i].verdict))}}
               .dump()
        << '\n';
    }
  });
  return kExitOk;
}

int cmd_evaluate(const Flags& f, std::ostream& out, std::ostream& err) {
  json cfg = read_json_file(f.config);
  if (!cfg.is_object()) throw ConfigError("experiment config must be a JSON object");
  if (f.seed) cfg["master_seed"] = *f.seed;
  if (f.tamper_rate) cfg["tamper_rate"] = *f.tamper_rate;
  if (!f.model_kind.empty()) cfg["models"] = json::array({f.model_kind});
  if (!f.odm_kind.empty()) cfg["odms"] = json::array({f.odm_kind});
  const auto config =
      harness::experiment_config_from_json(cfg, fs::path(f.config).parent_path());
  log_resolved(err, "evaluate", harness::to_json(config), config.master_seed);

  const auto report = harness::run_experiment(config);
  const std::string text = harness::to_json(report, f.timing).dump(2) + "\n";
  if (f.out.empty()) {
    out << text;
    err << harness::format_table(report);
  } else {
    write_output(f.out, out, [&](std::ostream& o) { o << text; });
    out << harness::format_table(report);
  }
  err << "miverify evaluate: wall " << report.wall_seconds << " s\n";
  return kExitOk;
}

int cmd_synth(const Flags& f, std::ostream& out, std::ostream& err) {
  json cfg = f.spec.empty() ? json::object() : read_json_file(f.spec);
  if (f.seed) cfg["seed"] = *f.seed;
  const auto spec = harness::synthetic_spec_from_json(cfg);
  log_resolved(err, "synth", harness::to_json(spec), spec.seed);
  const auto sd = harness::make_synthetic(spec);
  const fs::path dir = f.out_dir;
  fs::create_directories(dir);
  data::save_dataset(sd.splits.train, dir / "train.ndjson");
  data::save_dataset(sd.splits.val, dir / "val.ndjson");
  data::save_dataset(sd.splits.test, dir / "test.ndjson");
  out << json{{"train", sd.splits.train.size()},
              {"val", sd.splits.val.size()},
              {"test", sd.splits.test.size()}}
             .dump()
      << '\n';
  return kExitOk;
}

const std::vector<std::string> kModelKinds{"mae", "bidnn", "vsm"};
const std::vector<std::string> kOdmKinds{"ocsvm", "iforest"};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image-caption package integrity: train consistency models, fit outlier "
               "detectors, and assess packages."};
  app.name("miverify");
  app.require_subcommand(1);
  app.fallthrough(false);
  Flags f;

  auto* validate = app.add_subcommand(
      "validate", "Check a feature-package file; prints one NDJSON line per violation. "
                  "Exit 0 if valid, 2 otherwise.");
  validate->add_option("--in", f.in, "Feature-package NDJSON file")->required();

  auto* split = app.add_subcommand(
      "split", "Image-grouped train/val/test split into OUT_DIR/{train,val,test}.ndjson.");
  split->add_option("--in", f.in, "Feature-package NDJSON file")->required();
  split->add_option("--out-dir", f.out_dir, "Output directory")->required();
  split->add_option("--config", f.config, "JSON {train,val,test,seed}; flags override it");
  split->add_option("--train-fraction", f.train_fraction);
  split->add_option("--val-fraction", f.val_fraction);
  split->add_option("--test-fraction", f.test_fraction);
  split->add_option("--seed", f.seed, "Split seed");

  auto* tamper = app.add_subcommand(
      "tamper", "Caption-swap a fraction of packages; selected ones are labeled tampered.");
  tamper->add_option("--in", f.in, "Feature-package NDJSON file")->required();
  tamper->add_option("--out", f.out, "Output file (default stdout)");
  tamper->add_option("--tamper-rate", f.tamper_rate, "Fraction in (0,1], default 0.5");
  tamper->add_option("--seed", f.seed, "Tamper seed, default 0");

  auto* train = app.add_subcommand(
      "train-embed", "Train a consistency model on a reference dataset.");
  train->add_option("--in", f.in, "Reference dataset (labels are ignored)")->required();
  train->add_option("--model-kind", f.model_kind)->required()->check(CLI::IsMember(kModelKinds));
  train->add_option("--out", f.out, "Model file")->required();
  train->add_option("--config", f.config, "Model config JSON; flags override it");
  train->add_option("--val", f.val, "Validation set for early stopping");
  train->add_option("--seed", f.seed, "Overrides train.seed");
  train->add_option("--epochs", f.epochs, "Overrides train.epochs");

  auto* score = app.add_subcommand(
      "score", "ICCS per package as NDJSON {package_id, iccs}.");
  score->add_option("--model", f.model, "Model file")->required();
  score->add_option("--in", f.in, "Feature-package NDJSON file")->required();
  score->add_option("--out", f.out, "Output file (default stdout)");

  auto* fit = app.add_subcommand(
      "fit-odm", "Fit an outlier detector on reference ICCS values, from --scores or from "
                 "--model applied to --in.");
  fit->add_option("--odm-kind", f.odm_kind)->required()->check(CLI::IsMember(kOdmKinds));
  fit->add_option("--out", f.out, "Detector file")->required();
  fit->add_option("--scores", f.scores, "NDJSON lines carrying \"iccs\"");
  fit->add_option("--model", f.model, "Model file");
  fit->add_option("--in", f.in, "Reference dataset");
  fit->add_option("--config", f.config, "Detector config JSON; flags override it");
  fit->add_option("--seed", f.seed, "Overrides seed");

  auto* assess = app.add_subcommand(
      "assess", "Verdict per package as NDJSON {package_id, iccs, verdict}.");
  assess->add_option("--model", f.model, "Model file")->required();
  assess->add_option("--odm", f.odm, "Detector file")->required();
  assess->add_option("--in", f.in, "Query packages")->required();
  assess->add_option("--out", f.out, "Output file (default stdout)");

  auto* evaluate = app.add_subcommand(
      "evaluate", "Run the model x detector grid. With --out the report JSON goes to the "
                  "file and the table to stdout; without it the JSON goes to stdout and "
                  "the table to stderr. Exit 3 on training divergence.");
  evaluate->add_option("--config", f.config, "Experiment config JSON")->required();
  evaluate->add_option("--out", f.out, "Report JSON file");
  evaluate->add_option("--seed", f.seed, "Overrides master_seed");
  evaluate->add_option("--tamper-rate", f.tamper_rate, "Overrides tamper_rate");
  evaluate->add_option("--model-kind", f.model_kind, "Run only this model")
      ->check(CLI::IsMember(kModelKinds));
  evaluate->add_option("--odm-kind", f.odm_kind, "Run only this detector")
      ->check(CLI::IsMember(kOdmKinds));
  evaluate->add_flag("--timing", f.timing, "Include wall-clock fields in the JSON");

  auto* synth = app.add_subcommand(
      "synth", "Write synthetic train/val/test feature-package files.");
  synth->add_option("--spec", f.spec, "Synthetic spec JSON (defaults if omitted)");
  synth->add_option("--out-dir", f.out_dir, "Output directory")->required();
  synth->add_option("--seed", f.seed, "Overrides seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    if (app.get_subcommands().empty()) err << app.help();
    return kExitValidation;
  }

  try {
    if (validate->parsed()) return cmd_validate(f, out, err);
    if (split->parsed()) return cmd_split(f, out, err);
    if (tamper->parsed()) return cmd_tamper(f, out, err);
    if (train->parsed()) return cmd_train(f, out, err);
    if (score->parsed()) return cmd_score(f, out, err);
    if (fit->parsed()) return cmd_fit_odm(f, out, err);
    if (assess->parsed()) return cmd_assess(f, out, err);
    if (evaluate->parsed()) return cmd_evaluate(f, out, err);
    if (synth->parsed()) return cmd_synth(f, out, err);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace miverify::cli
