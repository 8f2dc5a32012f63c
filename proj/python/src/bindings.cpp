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

#include <memory>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "miverify/dataset_io.hpp"
#include "miverify/datamodel.hpp"
#include "miverify/embed/embed_model.hpp"
#include "miverify/errors.hpp"
#include "miverify/harness/experiment.hpp"
#include "miverify/harness/metrics.hpp"
#include "miverify/harness/synthetic.hpp"
#include "miverify/odm/outlier_model.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace miverify;

namespace {

json to_cpp(const py::handle& obj) {
  if (obj.is_none()) return json::object();
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return json::parse(text);
}

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

std::vector<data::Label> parse_labels(const std::vector<std::string>& names) {
  std::vector<data::Label> out;
  for (const auto& n : names) out.push_back(data::parse_label(n));
  return out;
}

std::vector<odm::Verdict> parse_verdicts(const std::vector<std::string>& names) {
  std::vector<odm::Verdict> out;
  for (const auto& n : names) {
    if (n == "inlier") {
      out.push_back(odm::Verdict::kInlier);
    } else if (n == "outlier") {
      out.push_back(odm::Verdict::kOutlier);
    } else {
      throw ConfigError("unknown verdict '" + n + "'");
    }
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_miverify, m) {
  m.doc() = "Image-caption package integrity assessment";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", validation.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());

  py::class_<data::MediaPackage>(m, "MediaPackage")
      .def(py::init<>())
      .def_readwrite("package_id", &data::MediaPackage::package_id)
      .def_readwrite("image_id", &data::MediaPackage::image_id)
      .def_readwrite("caption_text", &data::MediaPackage::caption_text)
      .def_readwrite("image_features", &data::MediaPackage::image_features)
      .def_readwrite("caption_features", &data::MediaPackage::caption_features)
      .def_property(
          "label", [](const data::MediaPackage& p) { return std::string(data::to_string(p.label)); },
          [](data::MediaPackage& p, const std::string& s) { p.label = data::parse_label(s); })
      .def("__eq__", [](const data::MediaPackage& a, const data::MediaPackage& b) { return a == b; })
      .def("__repr__", [](const data::MediaPackage& p) {
        return "<MediaPackage " + p.package_id + " image=" + p.image_id + ">";
      });

  py::class_<data::FeatureDataset>(m, "FeatureDataset")
      .def(py::init<>())
      .def_readwrite("name", &data::FeatureDataset::name)
      .def_readwrite("d_img", &data::FeatureDataset::d_img)
      .def_readwrite("d_cap", &data::FeatureDataset::d_cap)
      .def_readwrite("packages", &data::FeatureDataset::packages)
      .def("__len__", &data::FeatureDataset::size)
      .def("__eq__", [](const data::FeatureDataset& a, const data::FeatureDataset& b) { return a == b; })
      .def("labels", [](const data::FeatureDataset& ds) {
        std::vector<std::string> out;
        for (const auto& p : ds.packages) out.emplace_back(data::to_string(p.label));
        return out;
      });

  m.def("load_dataset", &data::load_dataset, py::arg("path"));
  m.def("save_dataset", &data::save_dataset, py::arg("dataset"), py::arg("path"));
  m.def(
      "validate_dataset",
      [](const data::FeatureDataset& ds) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& v : data::validate_dataset(ds)) out.emplace_back(v.package_id, v.rule);
        return out;
      },
      py::arg("dataset"), "List of (package_id, rule) violations; empty when valid.");
  m.def(
      "split_dataset",
      [](const data::FeatureDataset& ds, double train, double val, double test, std::uint64_t seed) {
        auto s = data::split_dataset(ds, {train, val, test, seed});
        return py::make_tuple(std::move(s.train), std::move(s.val), std::move(s.test));
      },
      py::arg("dataset"), py::arg("train") = 0.8, py::arg("val") = 0.1, py::arg("test") = 0.1,
      py::arg("seed") = 0);
  m.def("tamper", &data::tamper, py::arg("dataset"), py::arg("rate") = 0.5, py::arg("seed") = 0);
  m.def(
      "make_synthetic",
      [](const py::object& spec) {
        auto sd = harness::make_synthetic(harness::synthetic_spec_from_json(to_cpp(spec)));
        return py::make_tuple(std::move(sd.splits.train), std::move(sd.splits.val),
                              std::move(sd.splits.test));
      },
      py::arg("spec") = py::none());

  py::class_<embed::EmbedModel, std::shared_ptr<embed::EmbedModel>>(m, "EmbedModel")
      .def_property_readonly("kind",
                             [](const embed::EmbedModel& e) { return std::string(embed::to_string(e.kind())); })
      .def("score", &embed::EmbedModel::score, py::arg("dataset"),
           "ICCS per package; larger means more consistent.")
      .def("iccs", [](const embed::EmbedModel& e, const data::MediaPackage& p) { return e.iccs(p).value; })
      .def_property_readonly("loss_history", &embed::EmbedModel::loss_history)
      .def("header", [](const embed::EmbedModel& e) { return to_py(e.header()); })
      .def("save", [](const embed::EmbedModel& e, const std::filesystem::path& p) { embed::save_model(e, p); });

  m.def(
      "train_model",
      [](const std::string& kind, const data::FeatureDataset& rd, const py::object& config,
         const data::FeatureDataset* val) {
        const json cfg = to_cpp(config);
        std::unique_ptr<embed::EmbedModel> model;
        {
          py::gil_scoped_release release;
          model = embed::train_model(embed::parse_model_kind(kind), rd, cfg, val);
        }
        return std::shared_ptr<embed::EmbedModel>(std::move(model));
      },
      py::arg("kind"), py::arg("reference"), py::arg("config") = py::none(), py::arg("val") = nullptr);
  m.def(
      "load_model",
      [](const std::filesystem::path& p) { return std::shared_ptr<embed::EmbedModel>(embed::load_model(p)); },
      py::arg("path"));

  py::class_<odm::OutlierModel>(m, "OutlierModel")
      .def_property_readonly("kind", [](const odm::OutlierModel& o) { return std::string(odm::to_string(o.kind())); })
      .def("config", [](const odm::OutlierModel& o) { return to_py(odm::to_json(o.config())); })
      .def(
          "predict",
          [](const odm::OutlierModel& o, double score) {
            const auto p = o.predict(score);
            return py::make_tuple(p.value, std::string(odm::to_string(p.verdict)));
          },
          py::arg("score"), "(decision value or anomaly score, 'inlier' | 'outlier')")
      .def(
          "verdicts",
          [](const odm::OutlierModel& o, const std::vector<double>& scores) {
            std::vector<std::string> out;
            for (const auto& p : o.predict_all(scores)) out.emplace_back(odm::to_string(p.verdict));
            return out;
          },
          py::arg("scores"))
      .def("save", [](const odm::OutlierModel& o, const std::filesystem::path& p) { odm::save_odm(o, p); });

  m.def(
      "fit_odm",
      [](const std::vector<double>& scores, const std::string& kind, const py::object& config) {
        odm::OdmConfig base;
        base.kind = odm::parse_odm_kind(kind);
        return odm::odm_fit_on_scores(scores, odm::odm_config_from_json(to_cpp(config), base));
      },
      py::arg("scores"), py::arg("kind") = "ocsvm", py::arg("config") = py::none());
  m.def("load_odm", &odm::load_odm, py::arg("path"));

  m.def(
      "f1_scores",
      [](const std::vector<std::string>& labels, const std::vector<std::string>& verdicts) {
        return to_py(harness::to_json(harness::f1_scores(parse_labels(labels), parse_verdicts(verdicts))));
      },
      py::arg("labels"), py::arg("verdicts"));

  py::class_<harness::EvaluationReport>(m, "EvaluationReport")
      .def("to_dict", [](const harness::EvaluationReport& r, bool timing) { return to_py(harness::to_json(r, timing)); },
           py::arg("include_timing") = false)
      .def("to_json", [](const harness::EvaluationReport& r) { return harness::to_json(r).dump(2); })
      .def("table", &harness::format_table)
      .def("ranking", [](const harness::EvaluationReport& r) {
        return to_py(harness::to_json(harness::compare_models(r)));
      });

  m.def(
      "run_experiment",
      [](const py::object& config) {
        const auto cfg = harness::experiment_config_from_json(to_cpp(config));
        py::gil_scoped_release release;
        return harness::run_experiment(cfg);
      },
      py::arg("config"));
}
