// Copyright 2026 The fewbase Authors.
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

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fewbase/adapters.hpp"
#include "fewbase/classifiers.hpp"
#include "fewbase/datastore.hpp"
#include "fewbase/episodes.hpp"
#include "fewbase/eval.hpp"
#include "fewbase/heuristics.hpp"
#include "fewbase/io.hpp"
#include "fewbase/library.hpp"
#include "fewbase/selection.hpp"
#include "fewbase/synthbench.hpp"
#include "fewbase/workflow.hpp"

namespace py = pybind11;
using namespace fewbase;

namespace {

UotParams uot_params(double epsilon, double tau, int max_iters, double tolerance, bool relative) {
  UotParams p;
  p.epsilon = epsilon;
  p.tau = tau;
  p.max_iters = max_iters;
  p.tolerance = tolerance;
  p.scale = relative ? UotScale::kRelative : UotScale::kAbsolute;
  return p;
}

FinetuneConfig finetune_config(int step1_epochs, int step2_epochs, std::size_t subset_cap, std::uint64_t seed) {
  FinetuneConfig c;
  c.step1.epochs = step1_epochs;
  c.step2.epochs = step2_epochs;
  c.subset_cap = subset_cap;
  c.seed = seed;
  return c;
}

}  // namespace

PYBIND11_MODULE(_fewbase, m) {
  m.doc() = "Few-shot feature adaptation core";

  // Leaked on purpose: the type must outlive the interpreter's module teardown.
  static py::handle error_type = py::exception<Error>(m, "FewbaseError", PyExc_ValueError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = error_type(e.what());
      inst.attr("code") = error_code_name(e.code());
      inst.attr("field") = e.field();
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  // --- data --------------------------------------------------------------
  py::class_<FeatureSet>(m, "FeatureSet")
      .def(py::init([](const MatrixF& features, std::vector<std::int32_t> labels, std::vector<std::string> names,
                       const std::string& split) {
             FeatureSet s;
             s.features = features;
             s.labels = std::move(labels);
             s.class_names = std::move(names);
             s.split = parse_split(split);
             s.validate();
             return s;
           }),
           py::arg("features"), py::arg("labels"), py::arg("class_names"), py::arg("split") = "train")
      .def_readonly("features", &FeatureSet::features)
      .def_readonly("labels", &FeatureSet::labels)
      .def_readonly("class_names", &FeatureSet::class_names)
      .def_property_readonly("split", [](const FeatureSet& s) { return std::string(split_name(s.split)); })
      .def_property_readonly("rows", &FeatureSet::rows)
      .def_property_readonly("dim", &FeatureSet::dim)
      .def_property_readonly("num_classes", &FeatureSet::num_classes)
      .def("__repr__", [](const FeatureSet& s) {
        return "FeatureSet(rows=" + std::to_string(s.rows()) + ", dim=" + std::to_string(s.dim()) +
               ", classes=" + std::to_string(s.num_classes()) + ", split=" + split_name(s.split) + ")";
      });

  py::class_<ClassSubset>(m, "ClassSubset")
      .def(py::init([](std::string method, std::vector<int> ids, std::vector<double> scores) {
             if (scores.empty()) scores.assign(ids.size(), 0.0);
             return ClassSubset{std::move(method), std::move(ids), std::move(scores)};
           }),
           py::arg("method"), py::arg("ids"), py::arg("scores") = std::vector<double>{})
      .def_readonly("method", &ClassSubset::method)
      .def_readonly("ids", &ClassSubset::ids)
      .def_readonly("scores", &ClassSubset::scores)
      .def("__len__", &ClassSubset::size);

  m.def("load_feature_set", &load_feature_set, py::arg("path"));
  m.def("save_feature_set", &save_feature_set, py::arg("feature_set"), py::arg("path"));
  m.def(
      "class_centroids",
      [](const FeatureSet& s) {
        auto t = class_centroids(s);
        return py::make_tuple(t.centroids, t.counts);
      },
      py::arg("feature_set"));

  // --- episodes ----------------------------------------------------------
  py::class_<Episode>(m, "Episode")
      .def_readonly("support_features", &Episode::support_features)
      .def_readonly("support_labels", &Episode::support_labels)
      .def_readonly("query_features", &Episode::query_features)
      .def_readonly("query_labels", &Episode::query_labels)
      .def_readonly("ways", &Episode::ways)
      .def_readonly("class_map", &Episode::class_map)
      .def_readonly("support_indices", &Episode::support_indices)
      .def_readonly("query_indices", &Episode::query_indices)
      .def_readonly("seed", &Episode::seed)
      .def("shots_per_class", &Episode::shots_per_class);

  m.def("sample_uniform_episode", &sample_uniform_episode, py::arg("feature_set"), py::arg("ways"), py::arg("shots"),
        py::arg("queries_per_class"), py::arg("seed"));
  m.def(
      "sample_md_episode",
      [](const FeatureSet& s, std::uint64_t seed) { return sample_md_episode(s, seed); }, py::arg("feature_set"),
      py::arg("seed"));
  m.def(
      "episode_stream",
      [](const FeatureSet& s, std::uint64_t seed, int count, const std::string& sampler, int ways, int shots,
         int queries) {
        SamplerConfig c;
        c.kind = parse_sampler(sampler);
        c.ways = ways;
        c.shots = shots;
        c.queries_per_class = queries;
        return episode_stream(s, seed, count, c);
      },
      py::arg("feature_set"), py::arg("seed"), py::arg("count"), py::arg("sampler") = "uniform", py::arg("ways") = 5,
      py::arg("shots") = 5, py::arg("queries_per_class") = 15);

  // --- classifiers -------------------------------------------------------
  py::class_<LinearHead>(m, "LinearHead")
      .def(py::init([](const Matrix& w, const Vector& b) {
             if (b.size() != w.rows()) throw Error(ErrorCode::kDimensionMismatch, "bias", "one bias per class");
             return LinearHead{w, b};
           }),
           py::arg("weights"), py::arg("bias"))
      .def_readonly("weights", &LinearHead::weights)
      .def_readonly("bias", &LinearHead::bias)
      .def("logits", &LinearHead::logits, py::arg("x"))
      .def("predict", [](const LinearHead& h, const Matrix& x) { return predict_labels(h, x); }, py::arg("x"))
      .def("softmax", [](const LinearHead& h, const Matrix& x) { return predict_softmax(h, x); }, py::arg("x"));

  m.def(
      "fit_linear_head",
      [](const FeatureSet& s, int epochs, double learning_rate, std::uint64_t seed) {
        auto c = TrainConfig::step1();
        c.epochs = epochs;
        c.learning_rate = learning_rate;
        c.seed = seed;
        py::gil_scoped_release release;
        return fit_linear_head(s, c);
      },
      py::arg("feature_set"), py::arg("epochs") = 10, py::arg("learning_rate") = 1e-3, py::arg("seed") = 0);
  m.def(
      "ncm_accuracy",
      [](const Matrix& support, const std::vector<int>& sl, const Matrix& query, const std::vector<int>& ql,
         bool center, bool l2_normalize) { return ncm_accuracy(support, sl, query, ql, {center, l2_normalize}); },
      py::arg("support"), py::arg("support_labels"), py::arg("query"), py::arg("query_labels"),
      py::arg("center") = false, py::arg("l2_normalize") = false);
  m.def(
      "ncm_predict",
      [](const Matrix& support, const std::vector<int>& labels, const Matrix& query) {
        return predict_ncm(fit_ncm(support, labels), query).labels;
      },
      py::arg("support"), py::arg("labels"), py::arg("query"));
  m.def(
      "silhouette_score", [](const Matrix& x, const std::vector<int>& y) { return silhouette_score(x, y); },
      py::arg("x"), py::arg("labels"));

  // --- adapters ----------------------------------------------------------
  py::class_<AdapterModel>(m, "AdapterModel")
      .def_property_readonly("mode", [](const AdapterModel& a) { return adapter_mode_name(a.mode); })
      .def_readonly("transform", &AdapterModel::transform)
      .def_readonly("bias", &AdapterModel::bias)
      .def("apply", [](const AdapterModel& a, const Matrix& x) { return apply_adapter(a, x); }, py::arg("x"));

  m.def(
      "finetune_two_step",
      [](const FeatureSet& base, const ClassSubset& subset, const std::string& mode, int step1_epochs,
         int step2_epochs, std::size_t subset_cap, std::uint64_t seed) {
        const auto cfg = finetune_config(step1_epochs, step2_epochs, subset_cap, seed);
        const auto am = parse_adapter_mode(mode);
        py::gil_scoped_release release;
        auto r = finetune_two_step(base, subset, am, cfg);
        return std::make_pair(std::move(r.adapter), std::move(r.head));
      },
      py::arg("base"), py::arg("subset"), py::arg("mode") = "square_residual", py::arg("step1_epochs") = 10,
      py::arg("step2_epochs") = 20, py::arg("subset_cap") = 10000, py::arg("seed") = 0);

  // --- selection ---------------------------------------------------------
  m.def("select_aa", &select_aa, py::arg("examples"), py::arg("head"), py::arg("m") = kDefaultSubsetSize);
  m.def(
      "select_uot",
      [](const Matrix& target, const Matrix& base, int m, double epsilon, double tau, int max_iters, double tol,
         bool relative) { return select_uot(target, base, uot_params(epsilon, tau, max_iters, tol, relative), m); },
      py::arg("target_centroids"), py::arg("base_centroids"), py::arg("m") = kDefaultSubsetSize,
      py::arg("epsilon") = 0.05, py::arg("tau") = 1.0, py::arg("max_iters") = 1000, py::arg("tolerance") = 1e-6,
      py::arg("relative") = true);

  py::class_<UotResult>(m, "UotResult")
      .def_readonly("plan", &UotResult::plan)
      .def_readonly("row_marginals", &UotResult::row_marginals)
      .def_readonly("col_marginals", &UotResult::col_marginals)
      .def_readonly("iterations", &UotResult::iterations)
      .def_readonly("residual", &UotResult::residual)
      .def_readonly("converged", &UotResult::converged)
      .def_readonly("epsilon", &UotResult::epsilon)
      .def_readonly("tau", &UotResult::tau);

  m.def(
      "unbalanced_sinkhorn",
      [](const Matrix& cost, const Vector& a, const Vector& b, double epsilon, double tau, int max_iters, double tol,
         bool relative) { return unbalanced_sinkhorn(cost, a, b, uot_params(epsilon, tau, max_iters, tol, relative)); },
      py::arg("cost"), py::arg("mass_rows"), py::arg("mass_cols"), py::arg("epsilon") = 0.05, py::arg("tau") = 1.0,
      py::arg("max_iters") = 1000, py::arg("tolerance") = 1e-6, py::arg("relative") = true);

  // --- library -----------------------------------------------------------
  py::class_<ClassPartition>(m, "ClassPartition")
      .def_readonly("assignment", &ClassPartition::assignment)
      .def_readonly("clusters", &ClassPartition::clusters)
      .def_property_readonly("representation",
                             [](const ClassPartition& p) { return std::string(representation_name(p.representation)); })
      .def("members", &ClassPartition::members);

  m.def(
      "ward_cluster",
      [](const Matrix& x, int clusters) {
        auto r = ward_cluster(x, clusters);
        std::vector<std::tuple<int, int, double, int>> merges;
        for (const auto& mg : r.dendrogram.merges) merges.emplace_back(mg.left, mg.right, mg.distance, mg.size);
        return std::make_pair(merges, r.partition);
      },
      py::arg("representation"), py::arg("clusters") = kDefaultClusterCount);
  m.def("random_partition", &random_partition, py::arg("classes"), py::arg("clusters"), py::arg("seed"));

  py::class_<ExtractorLibrary>(m, "ExtractorLibrary")
      .def("__len__", [](const ExtractorLibrary& l) { return l.entries.size(); })
      .def("base_index", &ExtractorLibrary::base_index)
      .def("subset", [](const ExtractorLibrary& l, std::size_t i) { return l.entries.at(i).subset; }, py::arg("index"))
      .def("adapter", [](const ExtractorLibrary& l, std::size_t i) { return l.entries.at(i).adapter; },
           py::arg("index"));

  m.def(
      "build_library",
      [](const FeatureSet& base, const ClassPartition& partition, const std::string& mode, int step1_epochs,
         int step2_epochs, std::uint64_t seed, int jobs) {
        const auto cfg = finetune_config(step1_epochs, step2_epochs, 10000, seed);
        const auto am = parse_adapter_mode(mode);
        py::gil_scoped_release release;
        return build_library(base, partition, am, cfg, jobs);
      },
      py::arg("base"), py::arg("partition"), py::arg("mode") = "square_residual", py::arg("step1_epochs") = 10,
      py::arg("step2_epochs") = 20, py::arg("seed") = 0, py::arg("jobs") = 1);
  m.def("save_library", &save_library, py::arg("library"), py::arg("manifest_path"));
  m.def("load_library", &load_library, py::arg("manifest_path"));

  // --- heuristics --------------------------------------------------------
  m.def(
      "h_ssa",
      [](const Matrix& s, const std::vector<int>& y) {
        const auto r = h_ssa(s, y);
        return std::make_pair(r.value, r.degenerate);
      },
      py::arg("support"), py::arg("labels"));
  m.def(
      "h_ssc", [](const Matrix& s, const std::vector<int>& y, double t) { return h_ssc(s, y, t); }, py::arg("support"),
      py::arg("labels"), py::arg("temperature") = 1.0);
  m.def(
      "h_loo", [](const Matrix& s, const std::vector<int>& y, int reps, std::uint64_t seed) { return h_loo(s, y, reps, seed); },
      py::arg("support"), py::arg("labels"), py::arg("reps") = 30, py::arg("seed") = 0);
  m.def(
      "h_snr", [](const Matrix& s, const std::vector<int>& y) { return h_snr(s, y); }, py::arg("support"),
      py::arg("labels"));
  m.def(
      "h_mcs",
      [](const Matrix& s, const std::vector<int>& y, int samples, double shrinkage, std::uint64_t seed) {
        return h_mcs(s, y, samples, shrinkage, seed);
      },
      py::arg("support"), py::arg("labels"), py::arg("samples") = 100, py::arg("shrinkage") = 0.3,
      py::arg("seed") = 0);
  m.def("h_rkm", &h_rkm, py::arg("features"), py::arg("eps") = 1e-7);
  m.def("fim_diagonal", &fim_diagonal, py::arg("probe"), py::arg("x"));

  // --- evaluation --------------------------------------------------------
  m.def(
      "paired_ci",
      [](const std::vector<double>& d) {
        const auto ci = paired_ci(d);
        return std::make_pair(ci.mean, ci.half_width);
      },
      py::arg("deltas"));
  m.def(
      "pearson_correlation",
      [](const std::vector<double>& x, const std::vector<double>& y) { return pearson_correlation(x, y); },
      py::arg("x"), py::arg("y"));

  // --- synthetic universes and workflows (JSON in, JSON out) ---------------
  py::class_<Universe>(m, "Universe")
      .def_readonly("base", &Universe::base)
      .def_readonly("target", &Universe::target)
      .def_readonly("pool", &Universe::pool)
      .def_readonly("semantic", &Universe::semantic)
      .def_readonly("truth", &Universe::truth);

  m.def(
      "_generate_universe",
      [](const std::string& config_json) { return generate_universe(universe_config_from_json(Json::parse(config_json))); },
      py::arg("config_json"));
  m.def(
      "_save_universe",
      [](const Universe& u, const std::string& config_json, const std::filesystem::path& dir) {
        save_universe(u, universe_config_from_json(Json::parse(config_json)), dir);
      },
      py::arg("universe"), py::arg("config_json"), py::arg("directory"));
  m.def(
      "selection_precision_recall",
      [](const ClassSubset& s, const ClassSubset& t) {
        const auto pr = selection_precision_recall(s, t);
        return std::make_pair(pr.precision, pr.recall);
      },
      py::arg("selected"), py::arg("truth"));
  m.def(
      "_run_workflow",
      [](const std::string& config_json, const std::filesystem::path& relative_to) {
        const auto cfg = run_config_from_json(Json::parse(config_json), RunConfig(), relative_to);
        cfg.validate(true);
        RunOutcome out;
        {
          py::gil_scoped_release release;
          out = run_workflow(cfg);
        }
        return py::make_tuple(out.summary.dump(), out.csv, out.exit_code);
      },
      py::arg("config_json"), py::arg("relative_to") = std::filesystem::path());
}
