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

#include "fewbase/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "fewbase/parallel.hpp"
#include "fewbase/selection.hpp"

namespace fewbase {

ConfidenceInterval paired_ci(std::span<const double> deltas) {
  const auto n = deltas.size();
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "deltas", "need at least 2 paired trials");
  const double mean = std::accumulate(deltas.begin(), deltas.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (const double d : deltas) ss += (d - mean) * (d - mean);
  const double s = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, kZ95 * s / std::sqrt(static_cast<double>(n))};
}

ConfidenceInterval mean_ci(std::span<const double> values) { return paired_ci(values); }

PairedResult make_paired_result(std::string method, std::vector<double> baseline, std::vector<double> method_accuracy) {
  if (baseline.size() != method_accuracy.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "episodes", "baseline and method lengths differ");
  }
  PairedResult r;
  r.method = std::move(method);
  r.deltas.resize(baseline.size());
  for (std::size_t i = 0; i < baseline.size(); ++i) r.deltas[i] = method_accuracy[i] - baseline[i];
  r.baseline_accuracy = std::move(baseline);
  r.method_accuracy = std::move(method_accuracy);
  if (r.deltas.size() >= 2) {
    const auto ci = paired_ci(r.deltas);
    r.mean_delta = ci.mean;
    r.half_width = ci.half_width;
    r.baseline_ci = mean_ci(r.baseline_accuracy);
    r.method_ci = mean_ci(r.method_accuracy);
  } else if (r.deltas.size() == 1) {
    r.mean_delta = r.deltas[0];
    r.baseline_ci.mean = r.baseline_accuracy[0];
    r.method_ci.mean = r.method_accuracy[0];
  }
  return r;
}

double baseline_accuracy(const Episode& episode, const NcmOptions& options) {
  return ncm_accuracy(episode.support_features, episode.support_labels, episode.query_features, episode.query_labels,
                      options);
}

std::vector<PairedResult> run_paired_comparison(const std::vector<Method>& methods, const std::vector<Episode>& episodes,
                                                int jobs) {
  const auto n = episodes.size();
  std::vector<double> baseline(n);
  std::vector<std::vector<double>> acc(methods.size(), std::vector<double>(n));
  parallel_for(n, jobs, [&](std::size_t i) {
    try {
      baseline[i] = baseline_accuracy(episodes[i]);
      for (std::size_t m = 0; m < methods.size(); ++m) acc[m][i] = methods[m].accuracy(episodes[i], i);
    } catch (const Error& e) {
      throw Error(e.code(), "episode " + std::to_string(i), e.what());
    }
  });
  std::vector<PairedResult> out;
  out.reserve(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) out.push_back(make_paired_result(methods[m].name, baseline, acc[m]));
  return out;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kDimensionMismatch, "y", "length mismatch");
  const auto n = x.size();
  if (n < 3) throw Error(ErrorCode::kInvalidArgument, "n", "correlation needs at least 3 pairs");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::kInvalidArgument, "variance", "zero variance in a coordinate");
  return sxy / std::sqrt(sxx * syy);
}

double boost_vs_baseline_correlation(const PairedResult& result) {
  return pearson_correlation(result.baseline_accuracy, result.deltas);
}

int ActivationProfile::classes_for(double q) const {
  for (std::size_t m = 0; m < cumulative.size(); ++m) {
    // Tolerate rounding in the prefix sums.
    if (cumulative[m] >= q - 1e-12) return static_cast<int>(m + 1);
  }
  return static_cast<int>(cumulative.size());
}

ActivationProfile activation_profile(const LinearHead& base_head, const Matrix& target) {
  ActivationProfile profile;
  profile.mean_activation = average_activations(target, base_head);
  const auto sorted = top_m(profile.mean_activation, static_cast<int>(profile.mean_activation.size()), "aa");
  profile.order = sorted.ids;
  double running = 0.0;
  for (const double s : sorted.scores) {
    running += s;
    profile.cumulative.push_back(running);
  }
  return profile;
}

SilhouetteDelta silhouette_delta(const Matrix& baseline_features, const Matrix& adapted_features,
                                 std::span<const int> labels) {
  SilhouetteDelta out;
  out.before = silhouette_score(baseline_features, labels);
  out.after = silhouette_score(adapted_features, labels);
  out.delta = out.after - out.before;
  return out;
}

std::string paired_results_csv(const std::vector<PairedResult>& results) {
  std::string out = "episode,method,baseline_acc,method_acc,delta\n";
  char buf[160];
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.deltas.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%s,%.6f,%.6f,%.6f\n", i, r.method.c_str(), r.baseline_accuracy[i],
                    r.method_accuracy[i], r.deltas[i]);
      out += buf;
    }
  }
  return out;
}

}  // namespace fewbase
