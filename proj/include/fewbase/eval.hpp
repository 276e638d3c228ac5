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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fewbase/classifiers.hpp"
#include "fewbase/episodes.hpp"

namespace fewbase {

inline constexpr double kZ95 = 1.96;

struct ConfidenceInterval {
  double mean = 0.0;
  double half_width = 0.0;

  bool excludes_zero() const { return mean - half_width > 0.0 || mean + half_width < 0.0; }
};

/// mean +/- 1.96 s / sqrt(n), s the sample standard deviation. n >= 2.
ConfidenceInterval paired_ci(std::span<const double> deltas);

/// Same normal approximation applied to raw accuracies (distribution of the
/// sample mean, no pairing).
ConfidenceInterval mean_ci(std::span<const double> values);

struct PairedResult {
  std::string method;
  std::vector<double> baseline_accuracy;
  std::vector<double> method_accuracy;
  std::vector<double> deltas;
  double mean_delta = 0.0;
  double half_width = 0.0;
  ConfidenceInterval baseline_ci;  // unpaired
  ConfidenceInterval method_ci;    // unpaired
};

PairedResult make_paired_result(std::string method, std::vector<double> baseline, std::vector<double> method_accuracy);

/// Per-episode query accuracy of a method. `index` is the episode position.
using AccuracyFn = std::function<double(const Episode& episode, std::size_t index)>;

struct Method {
  std::string name;
  AccuracyFn accuracy;
};

/// Identity features + NCM.
double baseline_accuracy(const Episode& episode, const NcmOptions& options = {});

/// Every method runs on the same episodes and is paired with the baseline.
/// Failures are rethrown with the episode index in the error field.
std::vector<PairedResult> run_paired_comparison(const std::vector<Method>& methods,
                                                const std::vector<Episode>& episodes, int jobs = 1);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

/// Pearson r between baseline accuracy and boost.
double boost_vs_baseline_correlation(const PairedResult& result);

struct ActivationProfile {
  Vector mean_activation;          // per base class
  std::vector<int> order;          // classes by descending activation, ties to lower id
  std::vector<double> cumulative;  // prefix sums along `order`

  /// Smallest M whose top-M cumulative activation reaches q.
  int classes_for(double q) const;
};

ActivationProfile activation_profile(const LinearHead& base_head, const Matrix& target);

struct SilhouetteDelta {
  double before = 0.0;
  double after = 0.0;
  double delta = 0.0;
};

SilhouetteDelta silhouette_delta(const Matrix& baseline_features, const Matrix& adapted_features,
                                 std::span<const int> labels);

/// Episode-level CSV: episode,method,baseline_acc,method_acc,delta.
std::string paired_results_csv(const std::vector<PairedResult>& results);

}  // namespace fewbase
