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

#include "miverify/harness/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "miverify/dataset_io.hpp"
#include "miverify/errors.hpp"
#include "miverify/rng.hpp"

namespace miverify::harness {

using nlohmann::json;

void ExperimentConfig::check() const {
  if (models.empty()) throw ConfigError("experiment needs at least one model kind");
  if (odms.empty()) throw ConfigError("experiment needs at least one ODM kind");
  if (!(tamper_rate > 0.0 && tamper_rate <= 1.0)) {
    throw ConfigError("tamper_rate must be in (0, 1]");
  }
  const int sources = (data.synthetic ? 1 : 0) + (data.dataset.empty() ? 0 : 1) +
                      (data.train.empty() && data.test.empty() ? 0 : 1);
  if (sources != 1) {
    throw ConfigError("experiment data: give exactly one of synthetic, dataset, or train/test");
  }
  if (!data.train.empty() && data.test.empty()) throw ConfigError("experiment data: test path missing");
  if (data.train.empty() && !data.test.empty()) throw ConfigError("experiment data: train path missing");
  if (data.synthetic) data.synthetic->check();
  split.check();
  if (threads == 0) throw ConfigError("threads must be >= 1");
  for (const auto& [name, _] : model_configs) embed::parse_model_kind(name);
  for (const auto& [name, _] : odm_configs) odm::parse_odm_kind(name);
}

json to_json(const ExperimentConfig& c) {
  json data = json::object();
  if (c.data.synthetic) data["synthetic"] = to_json(*c.data.synthetic);
  if (!c.data.dataset.empty()) data["dataset"] = c.data.dataset.generic_string();
  if (!c.data.train.empty()) data["train"] = c.data.train.generic_string();
  if (!c.data.val.empty()) data["val"] = c.data.val.generic_string();
  if (!c.data.test.empty()) data["test"] = c.data.test.generic_string();

  json models = json::array();
  for (auto k : c.models) models.push_back(std::string(embed::to_string(k)));
  json odms = json::array();
  for (auto k : c.odms) odms.push_back(std::string(odm::to_string(k)));
  json model_cfg = json::object();
  for (const auto& [k, v] : c.model_configs) model_cfg[k] = v;
  json odm_cfg = json::object();
  for (const auto& [k, v] : c.odm_configs) odm_cfg[k] = v;

  return {{"data", data},
          {"split",
           {{"train", c.split.train_fraction},
            {"val", c.split.val_fraction},
            {"test", c.split.test_fraction},
            {"seed", c.split.seed}}},
          {"tamper_rate", c.tamper_rate},
          {"models", models},
          {"odms", odms},
          {"model_configs", model_cfg},
          {"odm_configs", odm_cfg},
          {"master_seed", c.master_seed},
          {"threads", c.threads}};
}

namespace {

std::filesystem::path resolve(const json& v, const std::filesystem::path& base) {
  std::filesystem::path p = v.get<std::string>();
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
    for (const auto& [key, value] : j.items()) {
      if (key == "master_seed") {
        continue;
      } else if (key == "data") {
        for (const auto& [dk, dv] : value.items()) {
          if (dk == "synthetic") {
            SyntheticSpec base_spec;
            base_spec.seed = derive_seed(c.master_seed, "synthetic");
            c.data.synthetic = synthetic_spec_from_json(dv, base_spec);
          } else if (dk == "dataset") {
            c.data.dataset = resolve(dv, base);
          } else if (dk == "train") {
            c.data.train = resolve(dv, base);
          } else if (dk == "val") {
            c.data.val = resolve(dv, base);
          } else if (dk == "test") {
            c.data.test = resolve(dv, base);
          } else {
            throw ConfigError("unknown data key '" + dk + "'");
          }
        }
      } else if (key == "split") {
        for (const auto& [sk, sv] : value.items()) {
          if (sk == "train") {
            c.split.train_fraction = sv.get<double>();
          } else if (sk == "val") {
            c.split.val_fraction = sv.get<double>();
          } else if (sk == "test") {
            c.split.test_fraction = sv.get<double>();
          } else if (sk == "seed") {
            c.split.seed = sv.get<std::uint64_t>();
          } else {
            throw ConfigError("unknown split key '" + sk + "'");
          }
        }
      } else if (key == "tamper_rate") {
        c.tamper_rate = value.get<double>();
      } else if (key == "models") {
        c.models.clear();
        for (const auto& m : value) c.models.push_back(embed::parse_model_kind(m.get<std::string>()));
      } else if (key == "odms") {
        c.odms.clear();
        for (const auto& o : value) c.odms.push_back(odm::parse_odm_kind(o.get<std::string>()));
      } else if (key == "model_configs") {
        for (const auto& [mk, mv] : value.items()) c.model_configs[mk] = mv;
      } else if (key == "odm_configs") {
        for (const auto& [ok, ov] : value.items()) c.odm_configs[ok] = ov;
      } else if (key == "threads") {
        c.threads = value.get<std::size_t>();
      } else {
        throw ConfigError("unknown experiment key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.check();
  return c;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs fn, rethrowing library errors with `ctx` prepended and their type kept.
template <class Fn>
auto with_context(const std::string& ctx, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const FormatError& e) {
    throw e.with_context(ctx);
  } catch (const DivergenceError& e) {
    throw e.with_context(ctx);
  } catch (const ConvergenceError& e) {
    throw e.with_context(ctx);
  } catch (const ValidationError& e) {
    throw ValidationError(ctx + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(ctx + e.what());
  } catch (const Error& e) {
    throw Error(ctx + e.what());
  }
}

struct Prepared {
  data::FeatureDataset rd;
  data::FeatureDataset val;
  data::FeatureDataset eval;
};

Prepared prepare_data(const ExperimentConfig& cfg) {
  data::Splits s;
  if (cfg.data.synthetic) {
    s = make_synthetic(*cfg.data.synthetic).splits;
  } else if (!cfg.data.dataset.empty()) {
    auto ds = data::load_dataset(cfg.data.dataset);
    data::require_valid(ds);
    s = data::split_dataset(ds, cfg.split);
  } else {
    s.train = data::load_dataset(cfg.data.train);
    if (!cfg.data.val.empty()) s.val = data::load_dataset(cfg.data.val);
    s.test = data::load_dataset(cfg.data.test);
    data::require_valid(s.train);
    if (!s.val.empty()) data::require_valid(s.val);
    data::require_valid(s.test);
  }
  if (s.train.empty()) throw ValidationError("reference split is empty");
  if (s.test.empty()) throw ValidationError("evaluation split is empty");
  Prepared p;
  p.rd = data::with_labels(std::move(s.train), data::Label::kClean);
  p.val = data::with_labels(std::move(s.val), data::Label::kClean);
  p.eval = data::tamper(s.test, cfg.tamper_rate, derive_seed(cfg.master_seed, "tamper"));
  return p;
}

json model_config_for(const ExperimentConfig& cfg, embed::ModelKind kind) {
  const std::string name(embed::to_string(kind));
  json j = json::object();
  if (auto it = cfg.model_configs.find(name); it != cfg.model_configs.end() && !it->second.is_null()) {
    j = it->second;
  }
  if (!j.is_object()) throw ConfigError("model config for " + name + " must be an object");
  if (!j.contains("train")) j["train"] = json::object();
  if (!j["train"].contains("seed")) j["train"]["seed"] = derive_seed(cfg.master_seed, "model/" + name);
  return j;
}

odm::OdmConfig odm_config_for(const ExperimentConfig& cfg, embed::ModelKind model,
                              odm::OdmKind kind) {
  const std::string name(odm::to_string(kind));
  odm::OdmConfig base;
  base.kind = kind;
  base.seed = derive_seed(cfg.master_seed,
                          "odm/" + std::string(embed::to_string(model)) + "/" + name);
  odm::OdmConfig c = base;
  if (auto it = cfg.odm_configs.find(name); it != cfg.odm_configs.end() && !it->second.is_null()) {
    c = odm::odm_config_from_json(it->second, base);
  }
  c.kind = kind;
  return c;
}

double mean_where(const std::vector<double>& v, const data::FeatureDataset& ds, data::Label label) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (ds.packages[i].label == label) {
      sum += v[i];
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

struct ModelRun {
  ModelSummary summary;
  std::vector<CellResult> cells;
};

ModelRun run_model(const ExperimentConfig& cfg, const Prepared& data, embed::ModelKind kind) {
  const std::string mname(embed::to_string(kind));
  ModelRun out;
  out.summary.kind = kind;

  const auto t0 = Clock::now();
  std::unique_ptr<embed::EmbedModel> model = with_context("model=" + mname + ": ", [&] {
    return embed::train_model(kind, data.rd, model_config_for(cfg, kind),
                              data.val.empty() ? nullptr : &data.val);
  });
  out.summary.train_seconds = seconds_since(t0);
  const auto& hist = model->loss_history();
  out.summary.epochs_run = hist.size();
  out.summary.final_loss = hist.empty() ? 0.0 : hist.back();

  const auto [rd_scores, eval_scores] = with_context("model=" + mname + ": ", [&] {
    return std::make_pair(model->score(data.rd), model->score(data.eval));
  });
  double rd_sum = 0.0;
  for (double s : rd_scores) rd_sum += s;
  out.summary.mean_iccs_rd = rd_sum / static_cast<double>(rd_scores.size());
  out.summary.mean_iccs_clean = mean_where(eval_scores, data.eval, data::Label::kClean);
  out.summary.mean_iccs_tampered = mean_where(eval_scores, data.eval, data::Label::kTampered);

  std::vector<data::Label> labels;
  labels.reserve(data.eval.size());
  for (const auto& p : data.eval.packages) labels.push_back(p.label);

  for (auto okind : cfg.odms) {
    const std::string ctx = "model=" + mname + ", odm=" + std::string(odm::to_string(okind)) + ": ";
    const auto t1 = Clock::now();
    CellResult cell = with_context(ctx, [&] {
      const auto detector = odm::odm_fit_on_scores(rd_scores, odm_config_for(cfg, kind, okind));
      std::vector<odm::Verdict> verdicts;
      verdicts.reserve(eval_scores.size());
      for (const auto& pred : detector.predict_all(eval_scores)) verdicts.push_back(pred.verdict);
      return CellResult{kind, okind, f1_scores(labels, verdicts), 0.0};
    });
    cell.odm_seconds = seconds_since(t1);
    out.cells.push_back(cell);
  }
  return out;
}

}  // namespace

EvaluationReport run_experiment(const ExperimentConfig& cfg) {
  cfg.check();
  const auto t0 = Clock::now();
  const Prepared data = with_context("data: ", [&] { return prepare_data(cfg); });

  std::vector<ModelRun> runs(cfg.models.size());
  std::vector<std::exception_ptr> errors(cfg.models.size());
  const std::size_t workers = std::min(cfg.threads, cfg.models.size());
  auto work = [&](std::size_t w) {
    for (std::size_t m = w; m < cfg.models.size(); m += workers) {
      try {
        runs[m] = run_model(cfg, data, cfg.models[m]);
      } catch (...) {
        errors[m] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  // Report the first failing model in config order, whatever finished first.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EvaluationReport r;
  r.config = to_json(cfg);
  r.rd_size = data.rd.size();
  r.eval_size = data.eval.size();
  for (const auto& p : data.eval.packages) r.eval_tampered += p.label == data::Label::kTampered;
  for (auto& run : runs) {
    r.models.push_back(run.summary);
    for (auto& c : run.cells) r.cells.push_back(c);
  }
  r.wall_seconds = seconds_since(t0);
  return r;
}

json to_json(const EvaluationReport& r, bool include_timing) {
  json models = json::array();
  for (const auto& m : r.models) {
    json jm = {{"model", std::string(embed::to_string(m.kind))},
               {"epochs_run", m.epochs_run},
               {"final_loss", m.final_loss},
               {"mean_iccs_rd", m.mean_iccs_rd},
               {"mean_iccs_clean", m.mean_iccs_clean},
               {"mean_iccs_tampered", m.mean_iccs_tampered}};
    if (include_timing) jm["train_seconds"] = m.train_seconds;
    models.push_back(jm);
  }
  json cells = json::array();
  for (const auto& c : r.cells) {
    json jc = to_json(c.scores);
    jc["model"] = std::string(embed::to_string(c.model));
    jc["odm"] = std::string(odm::to_string(c.odm));
    if (include_timing) jc["odm_seconds"] = c.odm_seconds;
    cells.push_back(jc);
  }
  json j = {{"format", std::string(kReportFormat)},
            {"config", r.config},
            {"rd_size", r.rd_size},
            {"eval_size", r.eval_size},
            {"eval_tampered", r.eval_tampered},
            {"models", models},
            {"cells", cells},
            {"ranking", to_json(compare_models(r))}};
  if (include_timing) j["wall_seconds"] = r.wall_seconds;
  return j;
}

std::string format_table(const EvaluationReport& r) {
  std::vector<embed::ModelKind> models;
  std::vector<odm::OdmKind> odms;
  for (const auto& c : r.cells) {
    if (std::find(models.begin(), models.end(), c.model) == models.end()) models.push_back(c.model);
    if (std::find(odms.begin(), odms.end(), c.odm) == odms.end()) odms.push_back(c.odm);
  }
  auto upper = [](std::string_view s) {
    std::string u(s);
    for (auto& ch : u) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return u;
  };
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-8s", "");
  os << buf;
  for (auto o : odms) {
    std::snprintf(buf, sizeof buf, " | %-21s", upper(odm::to_string(o)).c_str());
    os << buf;
  }
  os << '\n';
  std::snprintf(buf, sizeof buf, "%-8s", "Model");
  os << buf;
  for (std::size_t i = 0; i < odms.size(); ++i) os << " | F1-tamp.   F1-clean  ";
  os << '\n' << std::string(8, '-');
  for (std::size_t i = 0; i < odms.size(); ++i) os << "-+-" << std::string(21, '-');
  os << '\n';
  for (auto m : models) {
    std::snprintf(buf, sizeof buf, "%-8s", upper(embed::to_string(m)).c_str());
    os << buf;
    for (auto o : odms) {
      const auto it = std::find_if(r.cells.begin(), r.cells.end(),
                                   [&](const CellResult& c) { return c.model == m && c.odm == o; });
      if (it == r.cells.end()) {
        std::snprintf(buf, sizeof buf, " | %-21s", "-");
      } else {
        std::snprintf(buf, sizeof buf, " | %-10.4f %-10.4f", it->scores.f1_tampered,
                      it->scores.f1_clean);
      }
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

std::vector<OdmRanking> compare_models(const EvaluationReport& r) {
  std::vector<OdmRanking> out;
  for (const auto& c : r.cells) {
    auto it = std::find_if(out.begin(), out.end(), [&](const OdmRanking& o) { return o.odm == c.odm; });
    if (it == out.end()) {
      out.push_back({c.odm, {}});
      it = out.end() - 1;
    }
    it->ranking.emplace_back(c.model, c.scores.f1_tampered);
  }
  for (auto& o : out) {
    std::stable_sort(o.ranking.begin(), o.ranking.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return embed::to_string(a.first) < embed::to_string(b.first);
    });
  }
  return out;
}

json to_json(const std::vector<OdmRanking>& rankings) {
  json j = json::object();
  for (const auto& o : rankings) {
    json arr = json::array();
    for (const auto& [kind, f1] : o.ranking) {
      arr.push_back({{"model", std::string(embed::to_string(kind))}, {"f1_tampered", f1}});
    }
    j[std::string(odm::to_string(o.odm))] = arr;
  }
  return j;
}

}  // namespace miverify::harness
