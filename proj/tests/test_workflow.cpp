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

#include "doctest.h"
#include "fewbase/workflow.hpp"
#include "oracles.hpp"

using namespace fewbase;

namespace {

WorkflowInputs small_inputs() {
  UniverseConfig uc;
  uc.dim = 12;
  uc.domains = 3;
  uc.classes_per_domain = 4;
  uc.examples_per_class = 30;
  uc.target_classes = 6;
  uc.target_examples_per_class = 25;
  uc.pool_classes = 4;
  uc.pool_examples_per_class = 10;
  uc.semantic_dim = 4;
  uc.seed = 3;
  auto u = generate_universe(uc);
  WorkflowInputs in;
  in.base = std::move(u.base);
  in.target = std::move(u.target);
  in.pool = std::move(u.pool);
  return in;
}

RunConfig quick_config(Workflow wf) {
  RunConfig c;
  c.workflow = wf;
  c.episode_count = 6;
  c.seed = 11;
  c.subset_size = 4;
  c.finetune.step1.epochs = 2;
  c.finetune.step2.epochs = 1;
  c.support_finetune.step1.epochs = 3;
  c.support_finetune.step2.epochs = 1;
  c.head_training.epochs = 3;
  return c;
}

}  // namespace

TEST_SUITE("workflow") {
  TEST_CASE("baseline has zero deltas") {
    const auto inputs = small_inputs();
    const auto out = run_workflow(quick_config(Workflow::kBaseline), inputs);
    CHECK(out.exit_code == kExitOk);
    CHECK(out.result.deltas.size() == 6);
    for (const double d : out.result.deltas) CHECK(d == 0.0);
    CHECK(out.summary["paired"]["mean_delta"] == 0.0);
  }

  TEST_CASE("every workflow runs and repeats exactly") {
    auto inputs = small_inputs();
    FinetuneConfig fc;
    fc.step1.epochs = 1;
    fc.step2.epochs = 1;
    inputs.library = build_library(inputs.base, random_partition(static_cast<int>(inputs.base.num_classes()), 3, 1),
                                   AdapterMode::kSquareResidual, fc);
    for (const auto wf : {Workflow::kSupport, Workflow::kTaskInformed, Workflow::kDomainInformed, Workflow::kUninformed}) {
      const auto a = run_workflow(quick_config(wf), inputs);
      const auto b = run_workflow(quick_config(wf), inputs);
      CHECK(a.exit_code == kExitOk);
      CHECK(a.csv == b.csv);
      CHECK(a.result.method == workflow_name(wf));
    }
    auto no_pool = inputs;
    no_pool.pool.reset();
    CHECK_THROWS_AS(run_workflow(quick_config(Workflow::kDomainInformed), no_pool), Error);
  }

  TEST_CASE("config JSON round trip") {
    auto c = quick_config(Workflow::kUninformed);
    c.heuristic = HeuristicKind::kFim;
    c.selector = SubsetSelector::kUot;
    c.uot.tau = 3.5;
    c.sampler.kind = SamplerKind::kMd;
    c.sampler.md.support_budget = 40;
    c.jobs = 2;
    c.reuse_cache = true;
    c.ncm.l2_normalize = true;
    const auto j = run_config_to_json(c);
    CHECK(run_config_to_json(run_config_from_json(j)) == j);
    CHECK(run_config_from_json(Json{{"subset_size", 7}}, c).heuristic == HeuristicKind::kFim);
    CHECK(run_config_from_json(j).ncm.l2_normalize);
    CHECK_FALSE(RunConfig().ncm.l2_normalize);
    CHECK_FALSE(RunConfig().ncm.center);
  }

  TEST_CASE("unknown workflows and bad configs name the field") {
    try {
      parse_workflow("magic");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.field() == "workflow");
      CHECK(e.code() == ErrorCode::kConfig);
    }
    CHECK(parse_workflow("DI") == Workflow::kDomainInformed);
    auto c = quick_config(Workflow::kBaseline);
    c.jobs = 0;
    CHECK_THROWS_AS(c.validate(false), Error);
    RunConfig missing;
    missing.base = "/nonexistent/base.ffs";
    missing.target = "/nonexistent/target.ffs";
    try {
      missing.validate(true);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kConfig);
    }
  }

  TEST_CASE("episode failures are recorded and the run continues") {
    auto inputs = small_inputs();
    const auto d = static_cast<std::size_t>(inputs.base.dim());
    ExtractorLibrary lib;
    LibraryEntry specialist;
    specialist.adapter = make_adapter(AdapterMode::kSquare, d, 1);
    specialist.head = init_head(2, d, 1);
    specialist.subset = {"c", {0, 1}, {1, 1}};
    specialist.cluster = 0;
    lib.entries.push_back(specialist);
    LibraryEntry base = specialist;
    base.adapter = make_adapter(AdapterMode::kIdentity, d, 0);
    base.is_base = true;
    base.cluster = -1;
    lib.entries.push_back(base);
    inputs.library = lib;
    auto eps = episode_stream(inputs.target, 2, 4, {});
    // A wider episode breaks the square adapter only.
    Episode wide = eps[1];
    wide.support_features.conservativeResize(Eigen::NoChange, wide.support_features.cols() + 1);
    wide.support_features.col(wide.support_features.cols() - 1).setZero();
    wide.query_features.conservativeResize(Eigen::NoChange, wide.query_features.cols() + 1);
    wide.query_features.col(wide.query_features.cols() - 1).setZero();
    eps[1] = wide;
    inputs.episodes = eps;
    auto c = quick_config(Workflow::kUninformed);
    c.heuristic = HeuristicKind::kSsc;
    const auto out = run_workflow(c, inputs);
    CHECK(out.exit_code == kExitEpisodeErrors);
    REQUIRE(out.failures.size() == 1);
    CHECK(out.failures[0].episode == 1);
    CHECK(out.failures[0].code == "dimension_mismatch");
    CHECK(out.evaluated == std::vector<std::size_t>{0, 2, 3});
    CHECK(out.summary["failures"].size() == 1);
    CHECK(out.csv.find("\n1,") == std::string::npos);
  }
}
