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

// Acceptance suite: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "miverify/cli.hpp"
#include "miverify/dataset_io.hpp"
#include "miverify/embed/bidnn.hpp"
#include "miverify/embed/mae.hpp"
#include "miverify/embed/vsm.hpp"
#include "miverify/errors.hpp"
#include "miverify/harness/experiment.hpp"
#include "miverify/nn/gradcheck.hpp"
#include "miverify/odm/iforest.hpp"
#include "miverify/odm/ocsvm.hpp"
#include "ocsvm_oracle.hpp"
#include "test_support.hpp"

namespace {

using namespace miverify;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// --- gradient fidelity ---

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  double worst_mae = 0, worst_bidnn = 0, worst_vsm = 0;
  std::size_t checked = 0, kinks = 0;
  auto run = [&](nn::ParameterSet& params, const nn::LossFn& loss, std::uint64_t seed) {
    testing::jitter_biases(params, seed);
    nn::GradCheckOptions opt;
    opt.max_coords = 200;
    opt.seed = seed;
    opt.skip_kinks = true;
    const auto r = nn::grad_check_report(params, loss, opt);
    checked += r.checked;
    kinks += r.kinks;
    return r.max_rel_error;
  };
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto ds = testing::random_dataset(6, 7, 5, seed);
    const auto fm = embed::feature_matrices(ds);

    embed::MaeConfig mc;
    mc.hidden = 6;
    mc.shared = 4;
    mc.train.seed = seed;
    embed::MaeModel mae(7, 5, mc);
    worst_mae = std::max(worst_mae, run(mae.mutable_parameters(),
                                        [&](bool g) { return mae.loss(fm.image, fm.caption, g); }, seed));

    embed::BidnnConfig bc;
    bc.hidden = 6;
    bc.representation = 4;
    bc.tied = true;
    bc.train.seed = seed;
    embed::BidnnModel bidnn(7, 5, bc);
    worst_bidnn = std::max(worst_bidnn, run(bidnn.mutable_parameters(),
                                            [&](bool g) { return bidnn.loss(fm.image, fm.caption, g); }, seed));

    embed::VsmConfig vc;
    vc.word_dim = 4;
    vc.hidden = 5;
    vc.embed_dim = 4;
    vc.margin = 0.5;
    vc.train.seed = seed;
    embed::VsmModel vsm(embed::build_vocab(ds), 7, vc);
    std::vector<std::vector<int>> caps;
    for (const auto& p : ds.packages) caps.push_back(vsm.vocabulary().encode(p.caption_text));
    worst_vsm = std::max(worst_vsm, run(vsm.mutable_parameters(),
                                        [&](bool g) { return vsm.loss(fm.image, caps, g); }, seed));
  }
  const double secs = seconds_since(t0);
  // Kink-adjacent coordinates have no well-defined derivative; allow at most 2% of them.
  const bool few_kinks = kinks * 50 <= checked + kinks;
  const bool ok = worst_mae < 1e-6 && worst_bidnn < 1e-6 && worst_vsm < 1e-6 && few_kinks && secs < 60.0;
  return {ok, fmt("max rel err mae=%.2e bidnn(tied)=%.2e vsm=%.2e; %.1f s", worst_mae, worst_bidnn,
                  worst_vsm, secs) +
                  "; kinks skipped " + std::to_string(kinks) + "/" + std::to_string(checked + kinks)};
}

// --- synthetic end-to-end ---

Outcome synthetic_end_to_end() {
  const auto t0 = Clock::now();
  // Default SyntheticSpec; model widths are scaled down for a single core.
  const json cfg = {
      {"data", {{"synthetic", json::object()}}},
      {"tamper_rate", 0.5},
      {"models", {"mae", "vsm"}},
      {"odms", {"ocsvm", "iforest"}},
      {"model_configs",
       {{"mae", {{"hidden", 64}, {"shared", 32}, {"train", {{"epochs", 30}, {"batch_size", 64}}}}},
        {"vsm",
         {{"word_dim", 32}, {"hidden", 64}, {"embed_dim", 32}, {"train", {{"epochs", 20}, {"batch_size", 64}}}}}}},
      {"master_seed", 1}};
  const auto report = harness::run_experiment(harness::experiment_config_from_json(cfg));
  const double secs = seconds_since(t0);

  bool ok = secs < 600.0;
  std::string detail;
  std::unordered_map<std::string, double> mae_f1;
  for (const auto& c : report.cells) {
    if (c.model == embed::ModelKind::kMae) mae_f1[std::string(odm::to_string(c.odm))] = c.scores.f1_tampered;
  }
  for (const auto& c : report.cells) {
    if (c.model != embed::ModelKind::kVsm) continue;
    const std::string o(odm::to_string(c.odm));
    const double mae = mae_f1.at(o);
    ok = ok && c.scores.f1_tampered >= 0.85 && c.scores.f1_clean >= 0.85 && c.scores.f1_tampered >= mae;
    detail += o + fmt(": vsm %.3f/%.3f mae %.3f; ", c.scores.f1_tampered, c.scores.f1_clean, mae);
  }
  return {ok, detail + fmt("%.1f s", secs)};
}

// --- one-class SVM ---

Outcome ocsvm_criteria() {
  Rng rng(2024);
  double worst_gap = 0.0;
  int instances = 0;
  for (std::size_t n = 2; n <= 4; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<odm::Point> pts(n, odm::Point(1 + rep % 2));
      for (auto& p : pts) {
        for (auto& v : p) v = rng.normal();
      }
      const double nu = 0.25 + 0.15 * rep;
      const double gamma = 0.2 + 2.0 * rng.uniform();
      const auto m = odm::ocsvm_fit(pts, {nu, gamma});
      worst_gap = std::max(worst_gap, std::abs(m.objective - testing::ocsvm_dual_grid_search(pts, nu, gamma)));
      ++instances;
    }
  }
  bool ok = worst_gap <= 1e-4;
  std::string detail = fmt("grid gap %.1e over %g instances; ", worst_gap, instances);

  for (double nu : {0.05, 0.1, 0.2}) {
    Rng g(77);
    std::vector<odm::Point> pts;
    for (int i = 0; i < 500; ++i) pts.push_back({g.normal()});
    const auto m = odm::ocsvm_fit(pts, {nu, 0.5});
    std::size_t out = 0;
    for (const auto& p : pts) out += m.decision(p) < 0.0;
    const double frac_out = out / 500.0;
    const double frac_sv = m.support_vectors.size() / 500.0;
    ok = ok && frac_out <= nu + 0.05 && frac_sv >= nu - 0.05;
    detail += fmt("nu=%.2f out=%.3f sv=%.3f; ", nu, frac_out, frac_sv);
  }
  return {ok, detail};
}

// --- isolation forest ---

Outcome iforest_criteria() {
  const double c256 = odm::avg_path_length_c(256);
  bool ok = std::abs(c256 - 10.2448) <= 1e-3;

  odm::IforestModel fixed;
  fixed.dim = 1;
  fixed.psi = 256;
  odm::IsolationTree t;
  odm::IsolationTree::Node leaf;
  leaf.size = 256;
  t.nodes.push_back(leaf);
  fixed.trees.push_back(t);
  const double half = fixed.score(odm::Point{0.0});
  ok = ok && half == 0.5;

  int top1 = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed * 7919 + 1);
    std::vector<odm::Point> pts;
    for (int i = 0; i < 100; ++i) pts.push_back({rng.uniform()});
    pts.push_back({10.0});
    const auto m = odm::iforest_fit(pts, {100, 256, seed});
    const double s_out = m.score(pts.back());
    bool best = true;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) best = best && m.score(pts[i]) < s_out;
    top1 += best;
  }
  ok = ok && top1 >= 95;

  Rng rng(5);
  std::vector<odm::Point> pts;
  for (int i = 0; i < 3000; ++i) pts.push_back({rng.normal(), rng.normal()});
  odm::IforestOptions opt{100, 256, 99};
  const auto one = odm::iforest_fit(pts, opt);
  opt.threads = 4;
  const auto four = odm::iforest_fit(pts, opt);
  const bool same = one == four;
  ok = ok && same;
  return {ok, fmt("c(256)=%.4f score(E[h]=c)=%.17g top1=%g/100 threads1==4:%g", c256, half, top1, same)};
}

// --- tamper generator ---

Outcome tamper_criteria() {
  std::size_t failures = 0, checked = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed ^ 0xabcdef);
    const std::size_t n = 8 + rng.below(60);  // every image group stays under half
    const std::size_t per_image = 1 + rng.below(3);
    const double rate = 0.05 + 0.95 * rng.uniform();
    const auto ds = testing::random_dataset(n, 3, 2, seed, per_image);
    const auto t = data::tamper(ds, rate, seed);

    std::unordered_map<double, std::size_t> owner;  // first caption feature -> package
    for (std::size_t i = 0; i < n; ++i) owner[(*ds.packages[i].caption_features)[0]] = i;
    std::size_t tampered = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = t.packages[i];
      const std::size_t donor = owner.at((*p.caption_features)[0]);
      if (p.label == data::Label::kTampered) {
        ++tampered;
        ok = ok && donor != i && ds.packages[donor].image_id != ds.packages[i].image_id &&
             ds.packages[donor].caption_text == p.caption_text;
      } else {
        ok = ok && p.label == data::Label::kClean && donor == i;
      }
    }
    std::size_t expect = static_cast<std::size_t>(std::ceil(rate * n - 1e-9));
    if (expect == 1) expect = 2;
    ok = ok && tampered == expect && tampered == data::tamper_count(n, rate);
    failures += !ok;
    ++checked;
  }
  return {failures == 0, fmt("%g seeds, %g failures", checked, failures)};
}

// --- determinism ---

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "miverify_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const json cfg = {
      {"data", {{"synthetic", {{"n_train", 400}, {"n_val", 50}, {"n_test", 100}}}}},
      {"model_configs",
       {{"mae", {{"hidden", 16}, {"shared", 8}, {"train", {{"epochs", 5}}}}},
        {"bidnn", {{"hidden", 16}, {"representation", 8}, {"train", {{"epochs", 5}}}}},
        {"vsm", {{"word_dim", 8}, {"hidden", 16}, {"embed_dim", 8}, {"train", {{"epochs", 5}}}}}}}};
  std::ofstream(dir / "exp.json") << cfg.dump(2);
  std::ostringstream sink;
  auto run = [&](const char* name) {
    return cli::run({"evaluate", "--config", (dir / "exp.json").string(), "--seed", "31", "--out",
                     (dir / name).string()},
                    sink, sink);
  };
  const int a = run("a.json");
  const int b = run("b.json");
  auto slurp = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string ja = slurp("a.json"), jb = slurp("b.json");
  fs::remove_all(dir);
  const bool ok = a == 0 && b == 0 && !ja.empty() && ja == jb;
  return {ok, fmt("exit %g/%g, %g bytes, identical=%g", a, b, double(ja.size()), ja == jb)};
}

// --- file format ---

Outcome file_format() {
  std::size_t round_trips = 0, failures = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto ds = testing::random_dataset(1 + seed % 9, 5, 3, seed, 2);
    Rng rng(seed);
    for (auto& p : ds.packages) {
      for (auto& v : p.image_features) v = std::ldexp(rng.normal(), static_cast<int>(rng.below(600)) - 300);
      if (rng.below(3) == 0) p.caption_features.reset();
      p.label = static_cast<data::Label>(rng.below(3));
    }
    ds.packages[0].image_features[0] = -0.0;
    std::stringstream buf;
    data::write_dataset(ds, buf);
    failures += !(data::read_dataset(buf) == ds);
    ++round_trips;
  }

  std::size_t named = 0, probes = 0;
  for (std::size_t bad_line = 2; bad_line <= 9; ++bad_line) {
    auto ds = testing::random_dataset(8, 2, 2, bad_line);
    ds.packages[bad_line - 2].caption_features->push_back(1.0);
    std::stringstream buf;
    data::write_dataset(ds, buf);
    ++probes;
    try {
      data::read_dataset(buf);
    } catch (const FormatError& e) {
      named += e.line() == bad_line &&
               std::string(e.what()).find("line " + std::to_string(bad_line)) != std::string::npos;
    }
  }
  return {failures == 0 && named == probes,
          fmt("%g/%g round trips exact; %g/%g malformed lines named", round_trips - failures, round_trips,
              named, probes)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient-fidelity", gradient_fidelity}, {"synthetic-end-to-end", synthetic_end_to_end},
      {"ocsvm", ocsvm_criteria},                {"iforest", iforest_criteria},
      {"tamper-generator", tamper_criteria},    {"determinism", determinism},
      {"file-format", file_format}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %-22s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
