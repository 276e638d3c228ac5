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

#include "fewbase/workflow.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>

#include "fewbase/parallel.hpp"
#include "fewbase/selection.hpp"

namespace fewbase {

Workflow parse_workflow(const std::string& name) {
  std::string n;
  for (const char ch : name) n += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (n == "baseline") return Workflow::kBaseline;
  if (n == "s" || n == "support") return Workflow::kSupport;
  if (n == "ti") return Workflow::kTaskInformed;
  if (n == "di") return Workflow::kDomainInformed;
  if (n == "ui") return Workflow::kUninformed;
  throw Error(ErrorCode::kConfig, "workflow", "unknown workflow '" + name + "'");
}

const char* workflow_name(Workflow workflow) {
  switch (workflow) {
    case Workflow::kBaseline: return "baseline";
    case Workflow::kSupport: return "s";
    case Workflow::kTaskInformed: return "ti";
    case Workflow::kDomainInformed: return "di";
    case Workflow::kUninformed: return "ui";
  }
  return "baseline";
}

SubsetSelector parse_selector(const std::string& name) {
  if (name == "aa") return SubsetSelector::kAa;
  if (name == "uot") return SubsetSelector::kUot;
  throw Error(ErrorCode::kConfig, "selector", "unknown selector '" + name + "'");
}

const char* selector_name(SubsetSelector selector) { return selector == SubsetSelector::kAa ? "aa" : "uot"; }

namespace {

bool needs_pool(const RunConfig& c) { return c.workflow == Workflow::kDomainInformed; }
bool needs_library(const RunConfig& c) { return c.workflow == Workflow::kUninformed; }

std::filesystem::path resolve_input(const RunConfig& c, const std::filesystem::path& explicit_path,
                                    const char* split) {
  if (!explicit_path.empty()) return explicit_path;
  if (c.manifest.empty()) return {};
  const auto manifest = load_manifest(c.manifest);
  if (!manifest.splits.count(split)) return {};
  return manifest.at(split);
}

void check_file(const std::filesystem::path& path, const std::string& field) {
  if (path.empty()) throw Error(ErrorCode::kConfig, field, "required input is missing");
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kConfig, field, "file not found: " + path.string());
}

}  // namespace

void RunConfig::validate(bool check_files) const {
  if (episode_count < 2 && episodes.empty()) throw Error(ErrorCode::kConfig, "episode_count", "need at least 2 episodes");
  if (subset_size < 1) throw Error(ErrorCode::kConfig, "subset_size", "must be >= 1");
  if (jobs < 1) throw Error(ErrorCode::kConfig, "jobs", "must be >= 1");
  if (sampler.kind == SamplerKind::kUniform && (sampler.ways < 2 || sampler.shots < 1 || sampler.queries_per_class < 1)) {
    throw Error(ErrorCode::kConfig, "sampler", "uniform sampler needs ways >= 2, shots >= 1, queries >= 1");
  }
  if (!check_files) return;
  if (!manifest.empty()) check_file(manifest, "manifest");
  check_file(resolve_input(*this, base, "train"), "base");
  check_file(resolve_input(*this, target, "test"), "target");
  if (needs_pool(*this)) check_file(resolve_input(*this, pool, "validation"), "pool");
  if (needs_library(*this)) check_file(library, "library");
  if (!head.empty()) check_file(head, "head");
  if (!episodes.empty()) check_file(episodes, "episodes");
}

// --- config JSON ----------------------------------------------------------

namespace {

Json train_to_json(const TrainConfig& t) {
  return Json{{"optimizer", optimizer_name(t.optimizer)}, {"learning_rate", t.learning_rate},
              {"momentum", t.momentum},                   {"nesterov", t.nesterov},
              {"adam_beta1", t.adam_beta1},               {"adam_beta2", t.adam_beta2},
              {"adam_eps", t.adam_eps},                   {"epochs", t.epochs},
              {"batch_size", t.batch_size},               {"max_examples", t.max_examples},
              {"weight_decay", t.weight_decay},           {"seed", t.seed}};
}

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, path + key, e.what());
  }
}

void read_path(const Json& j, const char* key, std::filesystem::path& out, const std::filesystem::path& rel) {
  std::string s;
  read(j, key, s, "");
  if (!j.contains(key)) return;
  out = s;
  if (!out.empty() && out.is_relative() && !rel.empty()) out = rel / out;
}

void train_from_json(const Json& j, TrainConfig& t, const std::string& path) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, path, "expected an object");
  if (j.contains("optimizer")) {
    std::string name;
    read(j, "optimizer", name, path);
    t.optimizer = parse_optimizer(name);
  }
  read(j, "learning_rate", t.learning_rate, path);
  read(j, "momentum", t.momentum, path);
  read(j, "nesterov", t.nesterov, path);
  read(j, "adam_beta1", t.adam_beta1, path);
  read(j, "adam_beta2", t.adam_beta2, path);
  read(j, "adam_eps", t.adam_eps, path);
  read(j, "epochs", t.epochs, path);
  read(j, "batch_size", t.batch_size, path);
  read(j, "max_examples", t.max_examples, path);
  read(j, "weight_decay", t.weight_decay, path);
  read(j, "seed", t.seed, path);
}

Json finetune_to_json(const FinetuneConfig& f) {
  return Json{{"step1", train_to_json(f.step1)},
              {"step2", train_to_json(f.step2)},
              {"subset_cap", f.subset_cap},
              {"projection_dim", f.projection_dim},
              {"standardize", f.standardize},
              {"seed", f.seed}};
}

void finetune_from_json(const Json& j, FinetuneConfig& f, const std::string& path) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, path, "expected an object");
  if (j.contains("step1")) train_from_json(j.at("step1"), f.step1, path + "step1.");
  if (j.contains("step2")) train_from_json(j.at("step2"), f.step2, path + "step2.");
  read(j, "subset_cap", f.subset_cap, path);
  read(j, "projection_dim", f.projection_dim, path);
  read(j, "standardize", f.standardize, path);
  read(j, "seed", f.seed, path);
}

}  // namespace

Json run_config_to_json(const RunConfig& c) {
  const auto& md = c.sampler.md;
  const auto& h = c.heuristic_params;
  return Json{
      {"workflow", workflow_name(c.workflow)},
      {"manifest", c.manifest.string()},
      {"base", c.base.string()},
      {"target", c.target.string()},
      {"pool", c.pool.string()},
      {"library", c.library.string()},
      {"head", c.head.string()},
      {"episodes", c.episodes.string()},
      {"output_dir", c.output_dir.string()},
      {"sampler",
       {{"kind", sampler_name(c.sampler.kind)},
        {"ways", c.sampler.ways},
        {"shots", c.sampler.shots},
        {"queries_per_class", c.sampler.queries_per_class},
        {"md",
         {{"min_ways", md.min_ways},
          {"max_ways", md.max_ways},
          {"min_shots", md.min_shots},
          {"max_shots", md.max_shots},
          {"support_budget", md.support_budget},
          {"queries_per_class", md.queries_per_class}}}}},
      {"episode_count", c.episode_count},
      {"seed", c.seed},
      {"adapter_mode", adapter_mode_name(c.adapter_mode)},
      {"selector", selector_name(c.selector)},
      {"subset_size", c.subset_size},
      {"finetune", finetune_to_json(c.finetune)},
      {"support_finetune", finetune_to_json(c.support_finetune)},
      {"head_training", train_to_json(c.head_training)},
      {"uot",
       {{"epsilon", c.uot.epsilon},
        {"tau", c.uot.tau},
        {"max_iters", c.uot.max_iters},
        {"tolerance", c.uot.tolerance},
        {"scale", c.uot.scale == UotScale::kRelative ? "relative" : "absolute"}}},
      {"heuristic", heuristic_name(c.heuristic)},
      {"heuristic_params",
       {{"ssc_temperature", h.ssc_temperature},
        {"loo_reps", h.loo_reps},
        {"loo_exhaustive_limit", h.loo_exhaustive_limit},
        {"mcs_samples", h.mcs_samples},
        {"mcs_shrinkage", h.mcs_shrinkage},
        {"rkm_eps", h.rkm_eps},
        {"fim_max_rows", h.fim_max_rows},
        {"seed", h.seed}}},
      {"jobs", c.jobs},
      {"reuse_cache", c.reuse_cache},
      {"ncm", {{"center", c.ncm.center}, {"l2_normalize", c.ncm.l2_normalize}}},
  };
}

RunConfig run_config_from_json(const Json& j, RunConfig c, const std::filesystem::path& rel) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "config", "expected a JSON object");
  if (j.contains("workflow")) {
    std::string w;
    read(j, "workflow", w, "");
    c.workflow = parse_workflow(w);
  }
  read_path(j, "manifest", c.manifest, rel);
  read_path(j, "base", c.base, rel);
  read_path(j, "target", c.target, rel);
  read_path(j, "pool", c.pool, rel);
  read_path(j, "library", c.library, rel);
  read_path(j, "head", c.head, rel);
  read_path(j, "episodes", c.episodes, rel);
  read_path(j, "output_dir", c.output_dir, rel);
  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    if (s.contains("kind")) {
      std::string k;
      read(s, "kind", k, "sampler.");
      c.sampler.kind = parse_sampler(k);
    }
    read(s, "ways", c.sampler.ways, "sampler.");
    read(s, "shots", c.sampler.shots, "sampler.");
    read(s, "queries_per_class", c.sampler.queries_per_class, "sampler.");
    if (s.contains("md")) {
      const auto& m = s.at("md");
      auto& md = c.sampler.md;
      read(m, "min_ways", md.min_ways, "sampler.md.");
      read(m, "max_ways", md.max_ways, "sampler.md.");
      read(m, "min_shots", md.min_shots, "sampler.md.");
      read(m, "max_shots", md.max_shots, "sampler.md.");
      read(m, "support_budget", md.support_budget, "sampler.md.");
      read(m, "queries_per_class", md.queries_per_class, "sampler.md.");
    }
  }
  read(j, "episode_count", c.episode_count, "");
  read(j, "seed", c.seed, "");
  if (j.contains("adapter_mode")) {
    std::string m;
    read(j, "adapter_mode", m, "");
    c.adapter_mode = parse_adapter_mode(m);
  }
  if (j.contains("selector")) {
    std::string s;
    read(j, "selector", s, "");
    c.selector = parse_selector(s);
  }
  read(j, "subset_size", c.subset_size, "");
  if (j.contains("finetune")) finetune_from_json(j.at("finetune"), c.finetune, "finetune.");
  if (j.contains("support_finetune")) finetune_from_json(j.at("support_finetune"), c.support_finetune, "support_finetune.");
  if (j.contains("head_training")) train_from_json(j.at("head_training"), c.head_training, "head_training.");
  if (j.contains("uot")) {
    const auto& u = j.at("uot");
    read(u, "epsilon", c.uot.epsilon, "uot.");
    read(u, "tau", c.uot.tau, "uot.");
    read(u, "max_iters", c.uot.max_iters, "uot.");
    read(u, "tolerance", c.uot.tolerance, "uot.");
    if (u.contains("scale")) {
      std::string s;
      read(u, "scale", s, "uot.");
      if (s != "relative" && s != "absolute") throw Error(ErrorCode::kConfig, "uot.scale", "expected relative|absolute");
      c.uot.scale = s == "relative" ? UotScale::kRelative : UotScale::kAbsolute;
    }
  }
  if (j.contains("heuristic")) {
    std::string h;
    read(j, "heuristic", h, "");
    c.heuristic = parse_heuristic(h);
  }
  if (j.contains("heuristic_params")) {
    const auto& h = j.at("heuristic_params");
    auto& p = c.heuristic_params;
    read(h, "ssc_temperature", p.ssc_temperature, "heuristic_params.");
    read(h, "loo_reps", p.loo_reps, "heuristic_params.");
    read(h, "loo_exhaustive_limit", p.loo_exhaustive_limit, "heuristic_params.");
    read(h, "mcs_samples", p.mcs_samples, "heuristic_params.");
    read(h, "mcs_shrinkage", p.mcs_shrinkage, "heuristic_params.");
    read(h, "rkm_eps", p.rkm_eps, "heuristic_params.");
    read(h, "fim_max_rows", p.fim_max_rows, "heuristic_params.");
    read(h, "seed", p.seed, "heuristic_params.");
  }
  read(j, "jobs", c.jobs, "");
  read(j, "reuse_cache", c.reuse_cache, "");
  if (j.contains("ncm")) {
    read(j.at("ncm"), "center", c.ncm.center, "ncm.");
    read(j.at("ncm"), "l2_normalize", c.ncm.l2_normalize, "ncm.");
  }
  return c;
}

// --- inputs ---------------------------------------------------------------

WorkflowInputs load_workflow_inputs(const RunConfig& config) {
  config.validate(true);
  WorkflowInputs in;
  in.base = load_feature_set(resolve_input(config, config.base, "train"));
  in.target = load_feature_set(resolve_input(config, config.target, "test"));
  if (needs_pool(config)) in.pool = load_feature_set(resolve_input(config, config.pool, "validation"));
  if (needs_library(config)) in.library = load_library(config.library);
  if (!config.head.empty()) in.head = head_from_json(load_json(config.head));
  if (!config.episodes.empty()) in.episodes = episodes_from_json(load_json(config.episodes), in.target);
  return in;
}

// --- run ------------------------------------------------------------------

namespace {

// Seed streams derived from the master seed.
enum SeedStream : std::uint64_t {
  kEpisodeStream = 1,
  kHeadStream = 2,
  kFinetuneStream = 3,
  kSupportStream = 4,
  kHeuristicStream = 5,
};

// Order-sensitive: the subset order fixes the local label order, which the
// fine-tune result depends on.
std::uint64_t subset_key(const ClassSubset& subset) {
  std::uint64_t h = mix64(subset.ids.size());
  for (const int id : subset.ids) h = mix64(h ^ static_cast<std::uint64_t>(id));
  return h;
}

double adapted_ncm_accuracy(const AdapterModel& adapter, const Episode& ep, const NcmOptions& options) {
  return ncm_accuracy(apply_adapter(adapter, ep.support_features), ep.support_labels,
                      apply_adapter(adapter, ep.query_features), ep.query_labels, options);
}

ClassSubset select_subset(const RunConfig& config, const Matrix& examples, const FeatureSet& base,
                          const LinearHead& head) {
  if (config.selector == SubsetSelector::kAa) return select_aa(examples, head, config.subset_size);
  return select_uot(examples, class_centroids(base).centroids, config.uot, config.subset_size);
}

/// Resolves derived seeds so the report records every value actually used.
RunConfig resolve_seeds(RunConfig c) {
  c.head_training.seed = split_seed(c.seed, kHeadStream);
  c.finetune.seed = split_seed(c.seed, kFinetuneStream);
  c.support_finetune.seed = split_seed(c.seed, kSupportStream);
  c.heuristic_params.seed = split_seed(c.seed, kHeuristicStream);
  return c;
}

}  // namespace

std::string run_outcome_csv(const RunOutcome& outcome) {
  std::string out = "episode,method,baseline_acc,method_acc,delta\n";
  char buf[200];
  const auto& r = outcome.result;
  for (std::size_t i = 0; i < r.deltas.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%s,%.6f,%.6f,%.6f\n", outcome.evaluated[i], r.method.c_str(),
                  r.baseline_accuracy[i], r.method_accuracy[i], r.deltas[i]);
    out += buf;
  }
  return out;
}

RunOutcome run_workflow(const RunConfig& config) {
  const auto inputs = load_workflow_inputs(config);
  return run_workflow(config, inputs);
}

RunOutcome run_workflow(const RunConfig& raw_config, const WorkflowInputs& inputs) {
  raw_config.validate(false);
  const RunConfig config = resolve_seeds(raw_config);
  if (needs_pool(config) && !inputs.pool) throw Error(ErrorCode::kConfig, "pool", "DI requires a domain pool");
  if (needs_library(config) && !inputs.library) throw Error(ErrorCode::kConfig, "library", "UI requires a library");

  const auto episodes = inputs.episodes
                            ? *inputs.episodes
                            : episode_stream(inputs.target, split_seed(config.seed, kEpisodeStream),
                                             config.episode_count, config.sampler);

  const bool wants_head = config.workflow == Workflow::kTaskInformed ||
                          config.workflow == Workflow::kDomainInformed || config.workflow == Workflow::kUninformed;
  std::optional<LinearHead> head = inputs.head;
  if (wants_head && !head) head = fit_linear_head(inputs.base, config.head_training);

  RunOutcome outcome;
  const auto n = episodes.size();
  std::vector<double> base_acc(n, 0.0), method_acc(n, 0.0);
  std::vector<std::optional<EpisodeFailure>> failed(n);
  std::vector<Json> trace(n);

  std::optional<FinetuneResult> di_model;
  if (config.workflow == Workflow::kDomainInformed) {
    outcome.subset = select_subset(config, inputs.pool->to_double(), inputs.base, *head);
    di_model = finetune_two_step(inputs.base, *outcome.subset, config.adapter_mode, config.finetune);
  }

  SelectionContext ui_context;
  if (config.workflow == Workflow::kUninformed) {
    ui_context.library = &*inputs.library;
    ui_context.base = &inputs.base;
    ui_context.base_head = &*head;
    ui_context.params = config.heuristic_params;
    ui_context.ncm = config.ncm;
    if (config.heuristic == HeuristicKind::kFim) prepare_fim(ui_context);
  }

  std::mutex cache_mu;
  std::map<std::uint64_t, std::shared_ptr<const FinetuneResult>> cache;

  parallel_for(n, config.jobs, [&](std::size_t i) {
    const Episode& ep = episodes[i];
    try {
      base_acc[i] = baseline_accuracy(ep, config.ncm);
      switch (config.workflow) {
        case Workflow::kBaseline: method_acc[i] = base_acc[i]; break;
        case Workflow::kSupport: {
          FinetuneConfig fc = config.support_finetune;
          fc.seed = split_seed(fc.seed, ep.seed);
          const auto model = finetune_on_support(ep, config.adapter_mode, fc);
          method_acc[i] = adapted_ncm_accuracy(model.adapter, ep, config.ncm);
          break;
        }
        case Workflow::kTaskInformed: {
          const auto subset = select_subset(config, ep.support_features, inputs.base, *head);
          const auto key = subset_key(subset);
          std::shared_ptr<const FinetuneResult> model;
          if (config.reuse_cache) {
            std::lock_guard<std::mutex> lock(cache_mu);
            if (auto it = cache.find(key); it != cache.end()) model = it->second;
          }
          if (!model) {
            model = std::make_shared<const FinetuneResult>(
                finetune_two_step(inputs.base, subset, config.adapter_mode, config.finetune));
            if (config.reuse_cache) {
              std::lock_guard<std::mutex> lock(cache_mu);
              cache.emplace(key, model);
            }
          }
          method_acc[i] = adapted_ncm_accuracy(model->adapter, ep, config.ncm);
          trace[i] = Json{{"subset_key", key}};
          break;
        }
        case Workflow::kDomainInformed: method_acc[i] = adapted_ncm_accuracy(di_model->adapter, ep, config.ncm); break;
        case Workflow::kUninformed: {
          const auto report = select_extractor(config.heuristic, ep, ui_context);
          method_acc[i] = report.query_accuracy;
          trace[i] = Json{{"selected", report.selected}, {"fallback", report.fallback}};
          break;
        }
      }
    } catch (const Error& e) {
      failed[i] = EpisodeFailure{i, error_code_name(e.code()), e.what()};
    } catch (const std::exception& e) {
      failed[i] = EpisodeFailure{i, "internal", e.what()};
    }
  });

  std::vector<double> b, m;
  Json selections = Json::array();
  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i]) {
      outcome.failures.push_back(*failed[i]);
      continue;
    }
    outcome.evaluated.push_back(i);
    b.push_back(base_acc[i]);
    m.push_back(method_acc[i]);
    if (!trace[i].is_null()) selections.push_back(Json{{"episode", i}, {"trace", trace[i]}});
  }
  outcome.result = make_paired_result(workflow_name(config.workflow), std::move(b), std::move(m));
  outcome.csv = run_outcome_csv(outcome);
  outcome.exit_code = outcome.failures.empty() ? kExitOk : kExitEpisodeErrors;

  Json failures = Json::array();
  for (const auto& f : outcome.failures) {
    failures.push_back(Json{{"episode", f.episode}, {"code", f.code}, {"message", f.message}});
  }
  const auto& r = outcome.result;
  outcome.summary = Json{
      {"config", run_config_to_json(config)},
      {"method", r.method},
      {"episodes", n},
      {"evaluated", r.deltas.size()},
      {"paired", {{"mean_delta", r.mean_delta}, {"half_width", r.half_width}}},
      {"unpaired",
       {{"baseline_mean", r.baseline_ci.mean},
        {"baseline_half_width", r.baseline_ci.half_width},
        {"method_mean", r.method_ci.mean},
        {"method_half_width", r.method_ci.half_width}}},
      {"failures", failures},
      {"selections", selections},
  };
  if (outcome.subset) outcome.summary["subset"] = subset_to_json(*outcome.subset);

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    const std::string stem = workflow_name(config.workflow);
    write_text_file(config.output_dir / (stem + "_episodes.csv"), outcome.csv);
    save_json(outcome.summary, config.output_dir / (stem + "_summary.json"));
  }
  return outcome;
}

}  // namespace fewbase
