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

// Acceptance suite. One PASS/FAIL line per criterion; the process exits
// nonzero when any criterion fails. Tolerances and runtime limits are fixed
// below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <unistd.h>

#include "fewbase/synthbench.hpp"
#include "fewbase/workflow.hpp"
#include "oracles.hpp"

namespace {

using namespace fewbase;
namespace fs = std::filesystem;

// Tolerances and limits.
constexpr double kNcmSeconds = 5.0;
constexpr double kWardSeconds = 30.0;
constexpr double kWardDistanceTol = 1e-9;  // relative, LW update vs from-scratch
constexpr double kUotMarginalTol = 1e-4;
constexpr double kUotClosedFormTol = 1e-8;
constexpr double kUotScaleTol = 1e-6;
constexpr double kFimRelTol = 0.02;
constexpr int kFimSamples = 100000;
constexpr double kGradRelTol = 1e-4;
constexpr double kRankTol = 1e-3;
constexpr double kRankOneMax = 1.01;
constexpr double kDiSeconds = 300.0;
constexpr double kPrecisionMin = 0.8;
constexpr double kSilhouetteTol = 1e-9;
constexpr int kPairedEpisodes = 600;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

// 1 -----------------------------------------------------------------------
Outcome ncm_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  int mismatched = 0;
  for (int e = 0; e < 1000; ++e) {
    const int classes = 5 + static_cast<int>(rng.below(6));
    const int dim = 2 + static_cast<int>(rng.below(15));
    const auto set = testing::random_feature_set(rng, classes, 30, dim, 2.0);
    const int shots = 1 + static_cast<int>(rng.below(5));
    const auto ep = sample_uniform_episode(set, 5, shots, 5, rng.next());
    const auto model = fit_ncm(ep.support_features, ep.support_labels, ep.ways);
    const auto got = predict_ncm(model, ep.query_features).labels;
    const auto want = testing::ncm_scan(ep.support_features, ep.support_labels, ep.ways, ep.query_features);
    if (got != want) ++mismatched;
  }
  const double secs = seconds_since(t0);
  return {mismatched == 0 && secs < kNcmSeconds,
          fmt("%.0f/1000 episodes differ, %.2fs (limit 5s)", mismatched, secs)};
}

// 2 -----------------------------------------------------------------------
Outcome ward_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  int mismatched = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 2 + static_cast<int>(rng.below(11));
    const int d = 1 + static_cast<int>(rng.below(5));
    Matrix x(n, d);
    if (inst % 4 == 3) {
      // Duplicated points force zero-distance ties.
      const int distinct = std::max(1, n / 3);
      Matrix anchors(distinct, d);
      for (Eigen::Index i = 0; i < anchors.size(); ++i) anchors.data()[i] = rng.normal();
      for (int i = 0; i < n; ++i) x.row(i) = anchors.row(static_cast<Eigen::Index>(rng.below(distinct)));
    } else {
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    }
    const auto got = ward_cluster(x, 1).dendrogram.merges;
    const auto want = testing::ward_reference(x);
    bool same = got.size() == want.size();
    for (std::size_t s = 0; same && s < got.size(); ++s) {
      same = got[s].left == want[s].left && got[s].right == want[s].right && got[s].size == want[s].size &&
             std::abs(got[s].distance - want[s].distance) <= kWardDistanceTol * std::max(1.0, want[s].distance);
    }
    if (!same) ++mismatched;
  }
  const double secs = seconds_since(t0);
  return {mismatched == 0 && secs < kWardSeconds, fmt("%.0f/200 instances differ, %.2fs (limit 30s)", mismatched, secs)};
}

// 3 -----------------------------------------------------------------------
Outcome uot_sanity() {
  Rng rng(303);
  double worst_marginal = 0.0;
  bool all_converged = true;
  for (int p = 0; p < 20; ++p) {
    Matrix cost(10, 50);
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = rng.uniform();
    const Vector a = Vector::Constant(10, 1.0 / 10.0);
    const Vector b = Vector::Constant(50, 1.0 / 50.0);
    UotParams params;
    params.epsilon = 0.05;
    params.tau = 1e3;  // relative to the median cost
    params.max_iters = 100000;
    params.tolerance = 1e-6;
    const auto r = unbalanced_sinkhorn(cost, a, b, params);
    all_converged = all_converged && r.converged;
    worst_marginal = std::max({worst_marginal, (r.row_marginals - a).cwiseAbs().maxCoeff(),
                               (r.col_marginals - b).cwiseAbs().maxCoeff()});
  }

  double worst_closed = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double a = 0.1 + 2.0 * rng.uniform(), b = 0.1 + 2.0 * rng.uniform(), c = 3.0 * rng.uniform();
    UotParams params;
    params.scale = UotScale::kAbsolute;
    params.epsilon = 0.05 + rng.uniform();
    params.tau = 0.1 + 3.0 * rng.uniform();
    params.tolerance = 1e-13;
    params.max_iters = 100000;
    const auto r = unbalanced_sinkhorn(Matrix::Constant(1, 1, c), Vector::Constant(1, a), Vector::Constant(1, b), params);
    const double want = testing::uot_1x1_primal(a, b, c, params.epsilon, params.tau);
    worst_closed = std::max(worst_closed, std::abs(r.plan(0, 0) - want));
  }

  double worst_scale = 0.0;
  for (int t = 0; t < 10; ++t) {
    Matrix cost(6, 9);
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = rng.uniform();
    Vector a(6), b(9);
    for (auto& v : a) v = 0.5 + rng.uniform();
    for (auto& v : b) v = 0.5 + rng.uniform();
    UotParams params;
    params.tolerance = 1e-12;
    params.max_iters = 100000;
    const auto r1 = unbalanced_sinkhorn(cost, a, b, params);
    const auto r2 = unbalanced_sinkhorn(cost * 37.5, a, b, params);
    worst_scale = std::max(worst_scale, (r1.plan - r2.plan).cwiseAbs().maxCoeff());
  }
  return {all_converged && worst_marginal < kUotMarginalTol && worst_closed < kUotClosedFormTol && worst_scale < kUotScaleTol,
          (all_converged ? "" : "not converged; ") +
              fmt("balanced-limit marginal err %.2e (<1e-4), 1x1 err %.2e (<1e-8), scale err %.2e (<1e-6)",
                  worst_marginal, worst_closed, worst_scale)};
}

// 4 -----------------------------------------------------------------------
Outcome fim_monte_carlo() {
  Rng rng(404);
  double worst = 0.0;
  for (int p = 0; p < 10; ++p) {
    const int c = 2 + static_cast<int>(rng.below(4));
    const int d = 1 + static_cast<int>(rng.below(8));
    LinearHead probe;
    probe.weights.resize(c, d);
    probe.bias.resize(c);
    for (Eigen::Index i = 0; i < probe.weights.size(); ++i) probe.weights.data()[i] = rng.normal();
    for (auto& v : probe.bias) v = 0.5 * rng.normal();
    Matrix x(40, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const Vector closed = fim_diagonal(probe, x);
    const Vector mc = testing::fim_monte_carlo(probe, x, kFimSamples, 4040 + static_cast<std::uint64_t>(p));
    worst = std::max(worst, (mc - closed).norm() / closed.norm());
  }
  return {worst < kFimRelTol, fmt("max relative error %.4f over 10 probes at 1e5 samples (<0.02)", worst)};
}

// 5 -----------------------------------------------------------------------
Outcome gradient_check() {
  Rng rng(505);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + static_cast<int>(rng.below(6));
    const int c = 2 + static_cast<int>(rng.below(4));
    const int d = 1 + static_cast<int>(rng.below(6));
    LinearHead head;
    head.weights.resize(c, d);
    head.bias.resize(c);
    for (Eigen::Index i = 0; i < head.weights.size(); ++i) head.weights.data()[i] = rng.normal();
    for (auto& v : head.bias) v = rng.normal();
    Matrix x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    std::vector<int> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = static_cast<int>(rng.below(static_cast<std::size_t>(c)));
    const auto g = cross_entropy_gradient(head, x, y);
    const auto fd = testing::finite_difference_gradient(head, x, y, 1e-5);
    worst = std::max({worst, testing::relative_error(g.d_weights, fd.d_weights),
                      testing::relative_error(g.d_bias, fd.d_bias), testing::relative_error(g.d_inputs, fd.d_inputs)});
  }
  return {worst < kGradRelTol, fmt("max relative error %.2e over 50 instances (<1e-4)", worst)};
}

// 6 -----------------------------------------------------------------------
Outcome rankme() {
  Rng rng(606);
  double worst = 0.0;
  for (int k = 1; k <= 8; ++k) {
    Matrix g(16, 16);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
    const Matrix rows = q.leftCols(k).transpose();  // k orthonormal rows
    worst = std::max(worst, std::abs(h_rkm(rows, 1e-7) - k));
  }
  Vector u(12), v(7);
  for (auto& e : u) e = rng.normal();
  for (auto& e : v) e = rng.normal();
  const double rank_one = h_rkm(u * v.transpose(), 1e-7);
  return {worst < kRankTol && rank_one <= kRankOneMax,
          fmt("orthonormal max |score-k| %.2e (<1e-3), rank-1 score %.6f (<=1.01)", worst, rank_one)};
}

// 7, 8 --------------------------------------------------------------------
RunConfig di_config(const Universe& u) {
  RunConfig rc;
  rc.workflow = Workflow::kDomainInformed;
  rc.episode_count = kPairedEpisodes;
  rc.seed = 7;
  rc.subset_size = static_cast<int>(u.truth.size());
  rc.sampler.kind = SamplerKind::kUniform;
  rc.sampler.ways = 5;
  rc.sampler.shots = 5;
  return rc;
}

WorkflowInputs inputs_of(const Universe& u) {
  WorkflowInputs in;
  in.base = u.base;
  in.target = u.target;
  in.pool = u.pool;
  return in;
}

Outcome synthetic_di_boost() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto u = generate_universe(UniverseConfig{});
  const auto out = run_workflow(di_config(u), inputs_of(u));
  const auto& r = out.result;
  const double secs = seconds_since(t0);
  const bool ok = r.deltas.size() == kPairedEpisodes && r.mean_delta > 0.0 && r.mean_delta - r.half_width > 0.0 &&
                  secs < kDiSeconds;
  return {ok, fmt("mean delta %+.4f +/- %.4f over %.0f episodes, %.1fs (limit 300s)", r.mean_delta, r.half_width,
                  static_cast<double>(r.deltas.size()), secs)};
}

Outcome selection_quality() {
  const auto aligned = generate_universe(UniverseConfig{});
  const auto head = fit_linear_head(aligned.base, TrainConfig::step1());
  const auto subset = select_aa(aligned.pool.to_double(), head, static_cast<int>(aligned.truth.size()));
  const auto pr = selection_precision_recall(subset, aligned.truth);

  UniverseConfig zero;
  zero.alignment = 0.0;
  const auto unaligned = generate_universe(zero);
  const auto out = run_workflow(di_config(unaligned), inputs_of(unaligned));
  const auto& r = out.result;
  const bool not_positive = r.mean_delta - r.half_width <= 0.0;
  return {pr.precision >= kPrecisionMin && not_positive,
          fmt("aligned AA precision %.3f (>=0.8); zero-alignment DI delta %+.4f +/- %.4f (CI must not exclude 0 "
              "from above)",
              pr.precision, r.mean_delta, r.half_width)};
}

// 9 -----------------------------------------------------------------------
Outcome heuristic_ordering() {
  UniverseConfig cfg;
  const auto u = generate_universe(cfg);
  const auto centroids = class_centroids(u.base);
  const Matrix semantic = u.semantic.to_double();
  const auto rep = build_class_representation(Representation::kX, centroids, &semantic);
  auto partition = ward_cluster(*rep, cfg.domains).partition;
  partition.representation = Representation::kX;
  const auto head = fit_linear_head(u.base, TrainConfig::step1());
  FinetuneConfig fc;
  fc.seed = 909;
  const auto lib = build_library(u.base, partition, AdapterMode::kSquareResidual, fc, 1, &head);

  // Exactly one entry whose subset is the relevant class set.
  int aligned_entries = 0;
  for (const auto& e : lib.entries) {
    if (e.is_base) continue;
    aligned_entries += selection_precision_recall(e.subset, u.truth).precision >= 0.5;
  }
  SamplerConfig sc;
  sc.kind = SamplerKind::kMd;
  const auto episodes = episode_stream(u.target, 99, kPairedEpisodes, sc);
  SelectionContext ctx;
  ctx.library = &lib;
  ctx.base = &u.base;
  ctx.base_head = &head;
  ctx.params.seed = 9;

  std::vector<double> oracle, ssa, rh;
  bool dominance = true;
  for (const auto& ep : episodes) {
    const auto ev = evaluate_entries(ep, lib);
    const auto o = select_extractor(HeuristicKind::kOracle, ep, ctx, &ev).query_accuracy;
    const auto s = select_extractor(HeuristicKind::kSsa, ep, ctx, &ev).query_accuracy;
    const auto r = select_extractor(HeuristicKind::kRh, ep, ctx, &ev).query_accuracy;
    for (const double acc : ev.query_accuracy) dominance = dominance && o >= acc;
    oracle.push_back(o);
    ssa.push_back(s);
    rh.push_back(r);
  }
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const auto gap = make_paired_result("ssa", rh, ssa);
  const bool ok = aligned_entries == 1 && dominance && mean(oracle) >= mean(ssa) && mean(ssa) >= mean(rh) &&
                  gap.mean_delta - gap.half_width > 0.0;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "aligned entries %d, oracle %.4f >= ssa %.4f >= rh %.4f, ssa-rh %+.4f +/- %.4f, episode-wise "
                "dominance %s",
                aligned_entries, mean(oracle), mean(ssa), mean(rh), gap.mean_delta, gap.half_width,
                dominance ? "yes" : "no");
  return {ok, buf};
}

// 10 ----------------------------------------------------------------------
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("fewbase_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  UniverseConfig ucfg;
  ucfg.seed = 10;
  const auto u = generate_universe(ucfg);
  save_universe(u, ucfg, root / "bench");
  const auto head = fit_linear_head(u.base, TrainConfig::step1());
  save_json(head_to_json(head), root / "bench" / "head.json");
  const auto partition = random_partition(static_cast<int>(u.base.num_classes()), 4, 3);
  const auto lib = build_library(u.base, partition, AdapterMode::kSquareResidual, FinetuneConfig{}, 1, &head);
  save_library(lib, root / "bench" / "lib" / "library.json");

  const std::vector<Workflow> flows = {Workflow::kBaseline, Workflow::kSupport, Workflow::kTaskInformed,
                                       Workflow::kDomainInformed, Workflow::kUninformed};
  int identical = 0;
  for (const auto w : flows) {
    std::string csv[2];
    for (int run = 0; run < 2; ++run) {
      RunConfig rc;
      rc.workflow = w;
      rc.manifest = root / "bench" / "manifest.json";
      rc.library = root / "bench" / "lib" / "library.json";
      rc.episode_count = 40;
      rc.seed = 1234;
      rc.subset_size = 8;
      rc.jobs = run == 0 ? 1 : 3;  // scheduling must not change the bytes
      rc.reuse_cache = run == 1;
      rc.output_dir = root / ("run" + std::to_string(run));
      run_workflow(rc);
      csv[run] = read_text_file(rc.output_dir / (std::string(workflow_name(w)) + "_episodes.csv"));
    }
    identical += csv[0] == csv[1] && !csv[0].empty();
  }
  fs::remove_all(root);
  return {identical == static_cast<int>(flows.size()),
          fmt("%.0f/5 workflows byte-identical across runs (jobs 1 vs 3, cache off vs on)", identical)};
}

// 11 ----------------------------------------------------------------------
Outcome identity_safety() {
  const auto u = generate_universe(UniverseConfig{});
  FinetuneConfig fc;
  fc.step2.learning_rate = 0.0;
  fc.seed = 11;
  const auto model = finetune_two_step(u.base, u.truth, AdapterMode::kSquareResidual, fc);
  const auto episodes = episode_stream(u.target, 111, 100, SamplerConfig{});
  int changed = 0;
  for (const auto& ep : episodes) {
    const auto base = predict_ncm(fit_ncm(ep.support_features, ep.support_labels, ep.ways), ep.query_features).labels;
    const Matrix s = apply_adapter(model.adapter, ep.support_features);
    const Matrix q = apply_adapter(model.adapter, ep.query_features);
    const auto adapted = predict_ncm(fit_ncm(s, ep.support_labels, ep.ways), q).labels;
    changed += adapted != base;
  }
  return {changed == 0, fmt("%.0f/100 episodes with any changed prediction", changed)};
}

// 12 ----------------------------------------------------------------------
Outcome silhouette() {
  Matrix x(4, 2);
  x << 0, 0, 0, 1, 4, 0, 4, 1;
  const std::vector<int> y = {0, 0, 1, 1};
  // Every point: a = 1, b = (4 + sqrt(17)) / 2.
  const double b = (4.0 + std::sqrt(17.0)) / 2.0;
  const double want = (b - 1.0) / b;
  const double got = silhouette_score(x, y);

  Rng rng(1212);
  Matrix pts(200, 6);
  std::vector<int> labels(200);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    labels[static_cast<std::size_t>(i)] = static_cast<int>(i % 2);
    for (Eigen::Index j = 0; j < pts.cols(); ++j) pts(i, j) = rng.normal();
    pts(i, 0) += labels[static_cast<std::size_t>(i)] == 1 ? 1.5 : -1.5;
  }
  AdapterModel identity = make_adapter(AdapterMode::kIdentity, 6, 0);
  const auto same = silhouette_delta(pts, apply_adapter(identity, pts), labels);
  // Doubles the class-mean separation along the discriminative axis.
  AdapterModel stretch = make_adapter(AdapterMode::kSquare, 6, 0);
  stretch.transform = Matrix::Identity(6, 6);
  stretch.transform(0, 0) = 2.0;
  stretch.bias.setZero();
  const auto wider = silhouette_delta(pts, apply_adapter(stretch, pts), labels);
  return {std::abs(got - want) < kSilhouetteTol && same.delta == 0.0 && wider.delta > 0.0,
          fmt("4-point |err| %.1e (<1e-9), identity delta %.1e (==0), doubled separation delta %+.4f (>0)",
              std::abs(got - want), same.delta, wider.delta)};
}

}  // namespace

int main() {
  report(1, "NCM oracle equivalence", ncm_equivalence);
  report(2, "Ward oracle equivalence", ward_equivalence);
  report(3, "UOT sanity", uot_sanity);
  report(4, "FIM closed form vs Monte Carlo", fim_monte_carlo);
  report(5, "Cross-entropy gradient check", gradient_check);
  report(6, "RankMe smooth rank", rankme);
  report(7, "Synthetic DI boost", synthetic_di_boost);
  report(8, "Selection quality and zero-alignment DI", selection_quality);
  report(9, "Heuristic ordering", heuristic_ordering);
  report(10, "Workflow determinism", determinism);
  report(11, "Identity safety", identity_safety);
  report(12, "Silhouette correctness", silhouette);
  std::printf("%d/12 criteria passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}
