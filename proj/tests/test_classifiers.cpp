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

#include <numbers>

#include "doctest.h"
#include "fewbase/classifiers.hpp"
#include "oracles.hpp"

using namespace fewbase;

TEST_SUITE("classifiers") {
  TEST_CASE("ncm matches a direct scan") {
    Rng rng(1);
    Matrix support(20, 6), query(50, 6);
    for (Eigen::Index i = 0; i < support.size(); ++i) support.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < query.size(); ++i) query.data()[i] = rng.normal();
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) labels.push_back(i % 4);
    const auto model = fit_ncm(support, labels, 4);
    CHECK(predict_ncm(model, query).labels == testing::ncm_scan(support, labels, 4, query));
  }

  TEST_CASE("ncm ties go to the lowest class") {
    Matrix support(2, 1);
    support << -1, 1;
    const std::vector<int> labels = {1, 0};
    Matrix query(1, 1);
    query << 0;
    CHECK(predict_ncm(fit_ncm(support, labels, 2), query).labels[0] == 0);
  }

  TEST_CASE("ncm preprocessing centers on the support then normalizes") {
    Matrix support(2, 2), query(1, 2);
    support << 10, 0, 12, 2;
    query << 13, 1;
    Matrix s = support, q = query;
    preprocess_for_ncm(s, q, {true, false});
    CHECK(s(0, 0) == doctest::Approx(-1.0));
    CHECK(q(0, 0) == doctest::Approx(2.0));
    CHECK(q(0, 1) == doctest::Approx(0.0));
    s = support;
    q = query;
    preprocess_for_ncm(s, q, {true, true});
    CHECK(s.row(1).norm() == doctest::Approx(1.0));
    CHECK(q(0, 0) == doctest::Approx(1.0));
    // Raw Euclidean puts the far query nearer the larger-norm class; direction alone flips it.
    Matrix sup(2, 2), qry(1, 2);
    sup << 1, 0, 0, 10;
    qry << 8, 7;
    const std::vector<int> y = {0, 1}, qy = {0};
    CHECK(ncm_accuracy(sup, y, qry, qy) == 0.0);
    CHECK(ncm_accuracy(sup, y, qry, qy, {false, true}) == 1.0);
  }

  TEST_CASE("accuracy counts matches") {
    const std::vector<int> p = {0, 1, 2, 2}, t = {0, 1, 1, 2};
    CHECK(accuracy(p, t) == doctest::Approx(0.75));
  }

  TEST_CASE("softmax is stable for large logits") {
    Matrix z(1, 3);
    z << 1000, 1000, -1000;
    const Matrix p = softmax_rows(z);
    CHECK(p(0, 0) == doctest::Approx(0.5));
    CHECK(p.allFinite());
  }

  TEST_CASE("analytic gradients match central differences") {
    Rng rng(2);
    LinearHead head = init_head(4, 5, 3);
    for (Eigen::Index i = 0; i < head.bias.size(); ++i) head.bias[i] = 0.3 * rng.normal();
    Matrix x(9, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    std::vector<int> y;
    for (int i = 0; i < 9; ++i) y.push_back(i % 4);
    const auto g = cross_entropy_gradient(head, x, y);
    const auto ref = testing::finite_difference_gradient(head, x, y, 1e-5);
    CHECK(g.loss == doctest::Approx(testing::mean_cross_entropy(head, x, y)).epsilon(1e-12));
    CHECK(cross_entropy_loss(head, x, y) == doctest::Approx(g.loss).epsilon(1e-12));
    CHECK(testing::relative_error(g.d_weights, ref.d_weights) < 1e-6);
    CHECK(testing::relative_error(g.d_bias, ref.d_bias) < 1e-6);
    CHECK(testing::relative_error(g.d_inputs, ref.d_inputs) < 1e-6);
  }

  TEST_CASE("cosine schedule endpoints") {
    CHECK(cosine_learning_rate(0.1, 0, 100) == doctest::Approx(0.1));
    CHECK(cosine_learning_rate(0.1, 50, 100) == doctest::Approx(0.05));
    CHECK(cosine_learning_rate(0.1, 100, 100) == doctest::Approx(0.0));
    CHECK(cosine_learning_rate(0.1, 25, 100) == doctest::Approx(0.05 * (1 + std::cos(std::numbers::pi / 4))));
  }

  TEST_CASE("training lowers the loss") {
    Rng rng(4);
    const auto set = testing::random_feature_set(rng, 5, 40, 8, 2.0);
    for (const auto cfg : {TrainConfig::step1(), TrainConfig::step2()}) {
      TrainLog log;
      auto c = cfg;
      c.learning_rate = 1e-2;
      const auto head = fit_linear_head(set, c, &log);
      CHECK(log.epoch_loss.size() == static_cast<std::size_t>(c.epochs) + 1);
      CHECK(log.epoch_loss.back() < log.epoch_loss.front());
      CHECK(head.num_classes() == 5);
    }
  }

  TEST_CASE("logistic regression separates easy support") {
    Matrix x(6, 2);
    x << 5, 0, 6, 0, 0, 5, 0, 6, -5, -5, -6, -6;
    const std::vector<int> y = {0, 0, 1, 1, 2, 2};
    const auto head = fit_logistic_regression(x, y);
    CHECK(predict_labels(head, x) == y);
  }

  TEST_CASE("silhouette matches the definition") {
    Rng rng(6);
    Matrix x(30, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) y.push_back(i % 3);
    CHECK(silhouette_score(x, y) == doctest::Approx(testing::silhouette_reference(x, y)).epsilon(1e-10));
  }

  TEST_CASE("optimizer names parse") {
    CHECK(parse_optimizer(optimizer_name(OptimizerKind::kSgd)) == OptimizerKind::kSgd);
    CHECK_THROWS_AS(parse_optimizer("lbfgs"), Error);
  }
}
