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
#include "fewbase/adapters.hpp"
#include "oracles.hpp"

using namespace fewbase;

TEST_SUITE("adapters") {
  TEST_CASE("identity and zero-initialized residual preserve inputs") {
    Rng rng(1);
    Matrix x(7, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    CHECK(apply_adapter(make_adapter(AdapterMode::kIdentity, 5, 1), x) == x);
    const auto residual = make_adapter(AdapterMode::kSquareResidual, 5, 1);
    CHECK(residual.transform.isZero());
    CHECK((apply_adapter(residual, x) - x).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("square and projection shapes") {
    const auto sq = make_adapter(AdapterMode::kSquare, 6, 2);
    CHECK(sq.output_dim() == 6);
    CHECK(sq.transform.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(6.0) + 1e-12);
    CHECK(make_adapter(AdapterMode::kProjection, 6, 2).output_dim() == 3);
    CHECK(make_adapter(AdapterMode::kProjection, 6, 2, 4).output_dim() == 4);
    CHECK_THROWS_AS(make_adapter(AdapterMode::kProjection, 6, 2, 7), Error);
    CHECK_THROWS_AS(parse_adapter_mode("mlp"), Error);
    CHECK(parse_adapter_mode(adapter_mode_name(AdapterMode::kStatsOnly)) == AdapterMode::kStatsOnly);
  }

  TEST_CASE("stats-only adapter standardizes with subset statistics") {
    Rng rng(3);
    const auto set = testing::random_feature_set(rng, 6, 20, 4, 3.0);
    const ClassSubset subset{"manual", {1, 4}, {0.0, 0.0}};
    FinetuneConfig cfg;
    const auto result = finetune_two_step(set, subset, AdapterMode::kStatsOnly, cfg);
    REQUIRE(result.adapter.stats);
    const auto stats = fit_standardization(set, subset);
    const Matrix x = set.to_double();
    const Matrix expected = (x.rowwise() - stats.mean.transpose()).array().rowwise() / stats.std.transpose().array();
    CHECK((apply_adapter(result.adapter, x) - expected).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("subset cap bounds the rows used") {
    Rng rng(4);
    const auto set = testing::random_feature_set(rng, 4, 50, 3, 2.0);
    FinetuneConfig cfg;
    cfg.subset_cap = 30;
    cfg.step1.epochs = 1;
    cfg.step2.epochs = 1;
    const ClassSubset subset{"manual", {0, 1, 2}, {0.0, 0.0, 0.0}};
    const auto result = finetune_two_step(set, subset, AdapterMode::kSquareResidual, cfg);
    CHECK(result.rows_used == 30);
    CHECK(result.head.num_classes() == 3);
    cfg.subset_cap = 0;
    CHECK_THROWS_AS(finetune_two_step(set, subset, AdapterMode::kSquareResidual, cfg), Error);
  }

  TEST_CASE("two-step fine-tune lowers the loss") {
    Rng rng(5);
    const auto set = testing::random_feature_set(rng, 5, 40, 6, 1.0);
    FinetuneConfig cfg;
    cfg.step1.learning_rate = 1e-2;
    cfg.step2.learning_rate = 1e-2;
    const ClassSubset subset{"manual", {0, 1, 2, 3, 4}, {0, 0, 0, 0, 0}};
    const auto result = finetune_two_step(set, subset, AdapterMode::kSquareResidual, cfg);
    CHECK(result.step1_log.epoch_loss.back() < result.step1_log.epoch_loss.front());
    CHECK(result.step2_log.epoch_loss.back() <= result.step2_log.epoch_loss.front());
  }

  TEST_CASE("frozen support fine-tune keeps the adapter") {
    Rng rng(6);
    const auto set = testing::random_feature_set(rng, 5, 20, 4, 2.0);
    const auto ep = sample_uniform_episode(set, 5, 3, 5, 1);
    const auto result = finetune_on_support(ep, AdapterMode::kSquareResidual, FinetuneConfig::support_defaults(), true);
    CHECK(result.adapter.transform.isZero());
    CHECK(result.head.num_classes() == 5);
  }
}
