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

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fewbase/adapters.hpp"
#include "fewbase/eval.hpp"
#include "fewbase/heuristics.hpp"
#include "fewbase/io.hpp"
#include "fewbase/selection.hpp"

namespace fewbase {

enum class Workflow { kBaseline, kSupport, kTaskInformed, kDomainInformed, kUninformed };

Workflow parse_workflow(const std::string& name);
const char* workflow_name(Workflow workflow);

enum class SubsetSelector { kAa, kUot };

SubsetSelector parse_selector(const std::string& name);
const char* selector_name(SubsetSelector selector);

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;        // unexpected error
inline constexpr int kExitUsage = 2;          // bad flags, unknown workflow
inline constexpr int kExitConfig = 3;         // invalid config or inputs
inline constexpr int kExitEpisodeErrors = 4;  // report written, some episodes failed

struct RunConfig {
  Workflow workflow = Workflow::kBaseline;
  // Inputs. A dataset manifest supplies train (base), test (target) and
  // validation (domain pool); explicit paths override it.
  std::filesystem::path manifest;
  std::filesystem::path base;
  std::filesystem::path target;
  std::filesystem::path pool;
  std::filesystem::path library;
  std::filesystem::path head;      // base classifier; trained on `base` when absent
  std::filesystem::path episodes;  // replay instead of sampling
  std::filesystem::path output_dir;

  SamplerConfig sampler;
  int episode_count = 600;
  std::uint64_t seed = 0;

  AdapterMode adapter_mode = AdapterMode::kSquareResidual;
  SubsetSelector selector = SubsetSelector::kAa;
  int subset_size = kDefaultSubsetSize;
  FinetuneConfig finetune;
  FinetuneConfig support_finetune = FinetuneConfig::support_defaults();
  TrainConfig head_training = TrainConfig::step1();
  UotParams uot;

  HeuristicKind heuristic = HeuristicKind::kSsa;
  HeuristicParams heuristic_params;

  int jobs = 1;
  bool reuse_cache = false;
  NcmOptions ncm;  // applied to baseline and method features alike

  /// Field-path errors (kConfig) for missing or inconsistent inputs.
  void validate(bool check_files = true) const;
};

Json run_config_to_json(const RunConfig& config);

/// Keys absent from `json` keep their value in `base`. Relative paths
/// resolve against `relative_to`.
RunConfig run_config_from_json(const Json& json, RunConfig base = RunConfig(),
                               const std::filesystem::path& relative_to = {});

/// Loaded inputs for an in-memory run.
struct WorkflowInputs {
  FeatureSet base;
  FeatureSet target;
  std::optional<FeatureSet> pool;
  std::optional<ExtractorLibrary> library;
  std::optional<LinearHead> head;
  std::optional<std::vector<Episode>> episodes;
};

WorkflowInputs load_workflow_inputs(const RunConfig& config);

struct EpisodeFailure {
  std::size_t episode = 0;
  std::string code;
  std::string message;
};

struct RunOutcome {
  PairedResult result;                 // over the successfully evaluated episodes
  std::vector<std::size_t> evaluated;  // episode positions in `result`
  std::vector<EpisodeFailure> failures;
  std::optional<ClassSubset> subset;   // DI selection
  std::string csv;
  Json summary;
  int exit_code = kExitOk;
};

/// Runs the configured workflow. Reports are written to `output_dir` when
/// it is set: `<workflow>_episodes.csv`, `<workflow>_summary.json`.
RunOutcome run_workflow(const RunConfig& config);
RunOutcome run_workflow(const RunConfig& config, const WorkflowInputs& inputs);

/// episode,method,baseline_acc,method_acc,delta over the evaluated episodes.
std::string run_outcome_csv(const RunOutcome& outcome);

}  // namespace fewbase
