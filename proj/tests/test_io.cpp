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

#include <filesystem>

#include "doctest.h"
#include "fewbase/io.hpp"
#include "oracles.hpp"

using namespace fewbase;

namespace {

Matrix f32(const Matrix& m) { return m.cast<float>().cast<double>(); }

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("head round trip is exact at f32") {
    auto head = init_head(3, 4, 1);
    head.bias << 0.1, -0.2, 0.3;
    const auto back = head_from_json(Json::parse(head_to_json(head).dump()));
    CHECK(back.weights == f32(head.weights));
    CHECK(back.bias == f32(head.bias));
    auto broken = head_to_json(head);
    broken["C"] = 4;
    CHECK_THROWS_AS(head_from_json(broken), Error);
  }

  TEST_CASE("adapter round trip") {
    auto a = make_adapter(AdapterMode::kSquare, 3, 7);
    StandardizationStats s;
    s.mean = Vector::LinSpaced(3, 0.0, 1.0);
    s.std = Vector::Constant(3, 2.0);
    a.stats = s;
    const auto back = adapter_from_json(adapter_to_json(a));
    CHECK(back.mode == AdapterMode::kSquare);
    CHECK(back.transform == f32(a.transform));
    REQUIRE(back.stats);
    CHECK(back.stats->std == s.std);
    const auto id = adapter_from_json(adapter_to_json(make_adapter(AdapterMode::kIdentity, 3, 0)));
    CHECK(id.mode == AdapterMode::kIdentity);
    CHECK(id.transform.size() == 0);
  }

  TEST_CASE("partition and subset round trip") {
    const auto p = random_partition(9, 3, 2);
    const auto back = partition_from_json(partition_to_json(p));
    CHECK(back.assignment == p.assignment);
    CHECK(back.representation == Representation::kR);
    auto bad = partition_to_json(p);
    bad["assignment"][0] = 5;
    CHECK_THROWS_AS(partition_from_json(bad), Error);
    const ClassSubset s{"aa", {4, 2}, {0.5, 0.25}};
    CHECK(subset_from_json(subset_to_json(s)).ids == s.ids);
  }

  TEST_CASE("episodes round trip through indices") {
    Rng rng(3);
    const auto set = testing::random_feature_set(rng, 6, 25, 2, 1.0);
    const auto eps = episode_stream(set, 9, 4, {});
    const auto back = episodes_from_json(Json::parse(episodes_to_json(eps).dump()), set);
    REQUIRE(back.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(back[i].support_features == eps[i].support_features);
      CHECK(back[i].query_labels == eps[i].query_labels);
      CHECK(back[i].seed == eps[i].seed);
    }
  }

  TEST_CASE("library and universe files round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "fewbase_io_test";
    std::filesystem::remove_all(dir);
    Rng rng(4);
    const auto set = testing::random_feature_set(rng, 4, 10, 3, 2.0);
    FinetuneConfig cfg;
    cfg.step1.epochs = 1;
    cfg.step2.epochs = 1;
    const auto lib = build_library(set, random_partition(4, 2, 1), AdapterMode::kSquareResidual, cfg);
    save_library(lib, dir / "lib.json");
    const auto back = load_library(dir / "lib.json");
    REQUIRE(back.entries.size() == lib.entries.size());
    CHECK(back.base_index() == lib.base_index());
    CHECK(back.entries[0].adapter.transform == f32(lib.entries[0].adapter.transform));
    CHECK(back.entries[0].subset.ids == lib.entries[0].subset.ids);

    UniverseConfig uc;
    uc.dim = 8;
    uc.domains = 2;
    uc.classes_per_domain = 3;
    uc.examples_per_class = 5;
    uc.domain_rank = 2;
    uc.target_classes = 3;
    uc.target_examples_per_class = 4;
    uc.pool_classes = 2;
    uc.pool_examples_per_class = 4;
    uc.semantic_dim = 4;
    save_universe(generate_universe(uc), uc, dir / "u");
    const auto manifest = load_manifest(dir / "u" / "manifest.json");
    CHECK(load_feature_set(manifest.at("test")).rows() == 12);
    const auto cfg_back = universe_config_from_json(load_json(dir / "u" / "universe.json"));
    CHECK(universe_config_to_json(cfg_back) == universe_config_to_json(uc));
    CHECK_THROWS_AS(universe_config_from_json(Json{{"dimension", 4}}), Error);
    std::filesystem::remove_all(dir);
  }
}
