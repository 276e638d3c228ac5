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

#include <set>

#include "doctest.h"
#include "fewbase/library.hpp"
#include "oracles.hpp"

using namespace fewbase;

namespace {

void check_against_reference(const Matrix& x) {
  const auto got = ward_cluster(x, 1).dendrogram;
  const auto ref = testing::ward_reference(x);
  REQUIRE(got.merges.size() == ref.size());
  for (std::size_t t = 0; t < ref.size(); ++t) {
    CHECK(got.merges[t].left == ref[t].left);
    CHECK(got.merges[t].right == ref[t].right);
    CHECK(got.merges[t].size == ref[t].size);
    CHECK(got.merges[t].distance == doctest::Approx(ref[t].distance).epsilon(1e-9));
  }
}

}  // namespace

TEST_SUITE("library") {
  TEST_CASE("ward merges match the from-scratch reference") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      Matrix x(25, 3);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
      check_against_reference(x);
    }
  }

  TEST_CASE("ward tie breaking follows node ids") {
    Matrix grid(9, 2);
    for (int i = 0; i < 9; ++i) grid.row(i) << i % 3, i / 3;
    check_against_reference(grid);
    Matrix line(4, 1);
    line << 0, 1, 2, 3;
    const auto d = ward_cluster(line, 1).dendrogram;
    CHECK(d.merges[0].left == 0);
    CHECK(d.merges[0].right == 1);
  }

  TEST_CASE("cutting yields the requested cluster count") {
    Rng rng(7);
    Matrix x(12, 2);
    for (int i = 0; i < 12; ++i) x.row(i) << 20.0 * (i / 4) + 0.1 * rng.normal(), 0.1 * rng.normal();
    const auto w = ward_cluster(x, 3);
    CHECK(w.partition.clusters == 3);
    for (int i = 0; i < 12; ++i) CHECK(w.partition.assignment[static_cast<std::size_t>(i)] == w.partition.assignment[static_cast<std::size_t>(4 * (i / 4))]);
    CHECK(std::set<int>(w.partition.assignment.begin(), w.partition.assignment.end()).size() == 3);
    for (int l = 1; l <= 12; ++l) {
      const auto p = cut_dendrogram(w.dendrogram, l);
      CHECK(std::set<int>(p.assignment.begin(), p.assignment.end()).size() == static_cast<std::size_t>(l));
    }
    CHECK_THROWS_AS(cut_dendrogram(w.dendrogram, 13), Error);
    const auto csv = dendrogram_csv(w.dendrogram);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);
  }

  TEST_CASE("random partitions cover every cluster") {
    for (const int l : {1, 3, 19, 20}) {
      const auto p = random_partition(20, l, 5);
      CHECK(std::set<int>(p.assignment.begin(), p.assignment.end()).size() == static_cast<std::size_t>(l));
      CHECK(random_partition(20, l, 5).assignment == p.assignment);
    }
    CHECK_THROWS_AS(random_partition(5, 6, 1), Error);
  }

  TEST_CASE("class representations") {
    CentroidTable t;
    t.centroids = Matrix::Random(6, 4);
    const Matrix sem = Matrix::Random(6, 3);
    CHECK(build_class_representation(Representation::kV, t, nullptr)->cols() == 4);
    CHECK(build_class_representation(Representation::kX, t, &sem)->cols() == 7);
    CHECK_FALSE(build_class_representation(Representation::kR, t, nullptr).has_value());
    CHECK_THROWS_AS(build_class_representation(Representation::kSe, t, nullptr), Error);
    CHECK_THROWS_AS(parse_representation("Q"), Error);
  }

  TEST_CASE("library has one entry per cluster plus the base") {
    Rng rng(9);
    const auto set = testing::random_feature_set(rng, 6, 15, 3, 2.0);
    const auto partition = random_partition(6, 2, 3);
    FinetuneConfig cfg;
    cfg.step1.epochs = 2;
    cfg.step2.epochs = 1;
    const auto lib = build_library(set, partition, AdapterMode::kSquareResidual, cfg);
    CHECK(lib.entries.size() == 3);
    const auto base = lib.base_index();
    CHECK(lib.entries[base].subset.size() == 6);
    const auto members = partition.members();
    for (std::size_t e = 0; e < lib.entries.size(); ++e) {
      if (e == base) continue;
      const int cl = lib.entries[e].cluster;
      CHECK(lib.entries[e].subset.ids == members[static_cast<std::size_t>(cl)]);
      CHECK(lib.entries[e].head.num_classes() == std::max<std::size_t>(2, members[static_cast<std::size_t>(cl)].size()));
    }
    CHECK(build_library(set, partition, AdapterMode::kSquareResidual, cfg, 2).entries[1].head.weights ==
          lib.entries[1].head.weights);
  }
}
