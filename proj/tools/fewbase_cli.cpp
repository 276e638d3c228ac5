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

// fewbase: command-line entry point.
//
// Exit codes: 0 ok, 1 unexpected error, 2 usage error, 3 invalid config or
// inputs, 4 report written but some episodes failed.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "fewbase/workflow.hpp"

namespace {

using namespace fewbase;
namespace fs = std::filesystem;

std::uint64_t default_seed() {
  const char* env = std::getenv("FFW_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, "FFW_SEED", std::string("not an unsigned integer: ") + env);
  }
}

void write_or_print(const std::string& text, const fs::path& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_text_file(out, text);
  }
}

void emit_json(const Json& json, const fs::path& out) { write_or_print(json.dump(2) + "\n", out); }

// Flags shared by the workflow-driven subcommands. Only flags given on the
// command line override the JSON config.
struct WorkflowFlags {
  std::string config;
  std::string workflow;
  std::string manifest, base, target, pool, library, head, episodes, output_dir;
  std::string sampler;
  int ways = 0, shots = 0, queries = 0, count = 0, m = 0, jobs = 0;
  std::uint64_t seed = 0;
  std::string mode, selector, heuristic;
  bool reuse_cache = false;
  bool center = false, l2_normalize = false;
  std::vector<CLI::Option*> opts;

  void add(CLI::App* app, bool with_workflow) {
    app->add_option("--config", config, "JSON run config")->check(CLI::ExistingFile);
    if (with_workflow) opts.push_back(app->add_option("--workflow", workflow, "baseline|s|ti|di|ui"));
    opts.push_back(app->add_option("--manifest", manifest, "dataset manifest (train/test/validation)"));
    opts.push_back(app->add_option("--base", base, "base feature file"));
    opts.push_back(app->add_option("--target", target, "target feature file"));
    opts.push_back(app->add_option("--pool", pool, "domain pool feature file"));
    opts.push_back(app->add_option("--library", library, "library manifest"));
    opts.push_back(app->add_option("--head", head, "base classifier JSON"));
    opts.push_back(app->add_option("--episodes", episodes, "episodes JSON to replay"));
    opts.push_back(app->add_option("--out-dir", output_dir, "report directory"));
    opts.push_back(app->add_option("--sampler", sampler, "uniform|md"));
    opts.push_back(app->add_option("--ways", ways));
    opts.push_back(app->add_option("--shots", shots));
    opts.push_back(app->add_option("--queries", queries));
    opts.push_back(app->add_option("--count", count, "episode count"));
    opts.push_back(app->add_option("--seed", seed, "master seed (default: $FFW_SEED or 0)"));
    opts.push_back(app->add_option("--m", m, "class subset size"));
    opts.push_back(app->add_option("--mode", mode, "adapter mode"));
    opts.push_back(app->add_option("--selector", selector, "aa|uot"));
    opts.push_back(app->add_option("--heuristic", heuristic, "UI heuristic"));
    opts.push_back(app->add_option("--jobs", jobs, "worker threads"));
    opts.push_back(app->add_flag("--reuse-cache", reuse_cache, "memoize TI fine-tunes by subset"));
    opts.push_back(app->add_flag("--center", center, "subtract the support mean before NCM"));
    opts.push_back(app->add_flag("--l2-normalize", l2_normalize, "l2-normalize rows before NCM"));
  }

  bool given(const char* name) const {
    for (const auto* o : opts) {
      if (o->check_lname(std::string(name).substr(2)) && o->count() > 0) return true;
    }
    return false;
  }

  RunConfig resolve() const {
    RunConfig c;
    c.seed = default_seed();
    if (!config.empty()) c = run_config_from_json(load_json(config), c, fs::path(config).parent_path());
    if (given("--workflow")) c.workflow = parse_workflow(workflow);
    if (given("--manifest")) c.manifest = manifest;
    if (given("--base")) c.base = base;
    if (given("--target")) c.target = target;
    if (given("--pool")) c.pool = pool;
    if (given("--library")) c.library = library;
    if (given("--head")) c.head = head;
    if (given("--episodes")) c.episodes = episodes;
    if (given("--out-dir")) c.output_dir = output_dir;
    if (given("--sampler")) c.sampler.kind = parse_sampler(sampler);
    if (given("--ways")) c.sampler.ways = ways;
    if (given("--shots")) c.sampler.shots = shots;
    if (given("--queries")) c.sampler.queries_per_class = queries;
    if (given("--count")) c.episode_count = count;
    if (given("--seed")) c.seed = seed;
    if (given("--m")) c.subset_size = m;
    if (given("--mode")) c.adapter_mode = parse_adapter_mode(mode);
    if (given("--selector")) c.selector = parse_selector(selector);
    if (given("--heuristic")) c.heuristic = parse_heuristic(heuristic);
    if (given("--jobs")) c.jobs = jobs;
    if (given("--reuse-cache")) c.reuse_cache = reuse_cache;
    if (given("--center")) c.ncm.center = center;
    if (given("--l2-normalize")) c.ncm.l2_normalize = l2_normalize;
    return c;
  }
};

void print_outcome(const RunOutcome& o) {
  const auto& r = o.result;
  std::printf("%-8s episodes=%zu  delta=%+.4f +/- %.4f  baseline=%.4f  method=%.4f  failures=%zu\n", r.method.c_str(),
              r.deltas.size(), r.mean_delta, r.half_width, r.baseline_ci.mean, r.method_ci.mean, o.failures.size());
}

int run_main(int argc, char** argv) {
  CLI::App app{"Few-shot feature adaptation via base-class subset selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fewbase 0.1.0");

  // sample-episodes
  auto* sample = app.add_subcommand("sample-episodes", "Sample a reproducible episode stream");
  std::string s_features, s_sampler = "uniform", s_out;
  int s_count = 600, s_ways = 5, s_shots = 5, s_queries = 15;
  std::uint64_t s_seed = 0;
  sample->add_option("--features", s_features, "feature file")->required()->check(CLI::ExistingFile);
  sample->add_option("--count", s_count);
  sample->add_option("--sampler", s_sampler, "uniform|md");
  sample->add_option("--ways", s_ways);
  sample->add_option("--shots", s_shots);
  sample->add_option("--queries", s_queries);
  auto* s_seed_opt = sample->add_option("--seed", s_seed);
  sample->add_option("--out", s_out, "episodes JSON (stdout if absent)");

  // fit-head
  auto* fit = app.add_subcommand("fit-head", "Train a linear softmax head on a feature file");
  std::string f_features, f_out, f_optimizer = "adam";
  TrainConfig f_cfg = TrainConfig::step1();
  bool f_logreg = false;
  fit->add_option("--features", f_features)->required()->check(CLI::ExistingFile);
  fit->add_option("--optimizer", f_optimizer, "adam|sgd");
  fit->add_option("--lr", f_cfg.learning_rate);
  fit->add_option("--epochs", f_cfg.epochs);
  fit->add_option("--batch-size", f_cfg.batch_size, "<= 0 means full batch");
  fit->add_option("--weight-decay", f_cfg.weight_decay);
  auto* f_seed_opt = fit->add_option("--seed", f_cfg.seed);
  fit->add_flag("--logistic", f_logreg, "logistic-regression preset, zero init");
  fit->add_option("--out", f_out);

  // predict
  auto* predict = app.add_subcommand("predict", "Predict labels with a head and report accuracy");
  std::string p_features, p_head, p_out;
  predict->add_option("--features", p_features)->required()->check(CLI::ExistingFile);
  predict->add_option("--head", p_head)->required()->check(CLI::ExistingFile);
  predict->add_option("--out", p_out, "row,label,prediction CSV");

  // select-aa
  auto* aa = app.add_subcommand("select-aa", "Average-activation class subset selection");
  std::string a_features, a_head, a_out;
  int a_m = kDefaultSubsetSize;
  aa->add_option("--features", a_features, "examples (labels ignored)")->required()->check(CLI::ExistingFile);
  aa->add_option("--head", a_head, "base classifier")->required()->check(CLI::ExistingFile);
  aa->add_option("--m", a_m);
  aa->add_option("--out", a_out);

  // select-uot
  auto* uot = app.add_subcommand("select-uot", "Unbalanced optimal transport class subset selection");
  std::string u_target, u_base, u_out, u_scale = "relative";
  UotParams u_params;
  int u_m = kDefaultSubsetSize;
  uot->add_option("--target", u_target, "target features; class centroids are transported")->required()->check(CLI::ExistingFile);
  uot->add_option("--base", u_base)->required()->check(CLI::ExistingFile);
  uot->add_option("--m", u_m);
  uot->add_option("--epsilon", u_params.epsilon);
  uot->add_option("--tau", u_params.tau);
  uot->add_option("--max-iters", u_params.max_iters);
  uot->add_option("--tol", u_params.tolerance);
  uot->add_option("--scale", u_scale, "relative|absolute")->check(CLI::IsMember({"relative", "absolute"}));
  uot->add_option("--out", u_out);

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Partition base classes (Ward or random)");
  std::string c_base, c_semantic, c_mode = "V", c_out, c_dendrogram;
  int c_l = kDefaultClusterCount;
  std::uint64_t c_seed = 0;
  cluster->add_option("--base", c_base)->required()->check(CLI::ExistingFile);
  cluster->add_option("--semantic", c_semantic, "one semantic row per base class")->check(CLI::ExistingFile);
  cluster->add_option("--mode", c_mode, "V|Se|X|R");
  cluster->add_option("--L", c_l, "cluster count");
  auto* c_seed_opt = cluster->add_option("--seed", c_seed, "R mode only");
  cluster->add_option("--out", c_out, "partition JSON");
  cluster->add_option("--dendrogram", c_dendrogram, "merge-list CSV");

  // build-library
  auto* build = app.add_subcommand("build-library", "Fine-tune one adapter per cluster");
  std::string b_base, b_partition, b_mode = "square_residual", b_head, b_out;
  int b_jobs = 1;
  std::uint64_t b_seed = 0;
  build->add_option("--base", b_base)->required()->check(CLI::ExistingFile);
  build->add_option("--partition", b_partition)->required()->check(CLI::ExistingFile);
  build->add_option("--mode", b_mode);
  build->add_option("--head", b_head, "base classifier kept in the base entry")->check(CLI::ExistingFile);
  build->add_option("--jobs", b_jobs);
  auto* b_seed_opt = build->add_option("--seed", b_seed);
  build->add_option("--out", b_out, "library manifest")->required();

  // finetune
  auto* ft = app.add_subcommand("finetune", "Two-step fine-tune on a base class subset");
  std::string t_base, t_subset, t_mode = "square_residual", t_out, t_head_out;
  FinetuneConfig t_cfg;
  ft->add_option("--base", t_base)->required()->check(CLI::ExistingFile);
  ft->add_option("--subset", t_subset)->required()->check(CLI::ExistingFile);
  ft->add_option("--mode", t_mode);
  ft->add_option("--lr1", t_cfg.step1.learning_rate, "step 1 learning rate");
  ft->add_option("--lr2", t_cfg.step2.learning_rate, "step 2 learning rate");
  ft->add_option("--epochs1", t_cfg.step1.epochs);
  ft->add_option("--epochs2", t_cfg.step2.epochs);
  ft->add_option("--cap", t_cfg.subset_cap, "maximum training rows");
  ft->add_flag("--standardize", t_cfg.standardize);
  auto* t_seed_opt = ft->add_option("--seed", t_cfg.seed);
  ft->add_option("--out", t_out, "adapter JSON")->required();
  ft->add_option("--head-out", t_head_out, "classifier JSON");

  // heuristics
  auto* heur = app.add_subcommand("heuristics", "Score library entries per episode");
  std::string h_library, h_base, h_target, h_episodes, h_kinds = "ssa", h_head, h_out;
  HeuristicParams h_params;
  heur->add_option("--library", h_library)->required()->check(CLI::ExistingFile);
  heur->add_option("--target", h_target, "feature file the episodes index")->required()->check(CLI::ExistingFile);
  heur->add_option("--episodes", h_episodes)->required()->check(CLI::ExistingFile);
  heur->add_option("--kinds", h_kinds, "comma-separated heuristics");
  heur->add_option("--base", h_base, "base features (FIM)")->check(CLI::ExistingFile);
  heur->add_option("--head", h_head, "base classifier (AA, FIM)")->check(CLI::ExistingFile);
  auto* h_seed_opt = heur->add_option("--seed", h_params.seed);
  NcmOptions h_ncm;
  heur->add_flag("--center", h_ncm.center, "subtract the support mean before NCM");
  heur->add_flag("--l2-normalize", h_ncm.l2_normalize, "l2-normalize rows before NCM");
  heur->add_option("--out", h_out, "CSV: episode,heuristic,entry,score,query_acc");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Paired comparison of several workflows on shared episodes");
  WorkflowFlags e_flags;
  std::string e_methods = "baseline,di";
  e_flags.add(evaluate, false);
  evaluate->add_option("--methods", e_methods, "comma-separated workflows");

  // run
  auto* run = app.add_subcommand("run", "Run one workflow end to end");
  WorkflowFlags r_flags;
  r_flags.add(run, true);

  // synthetic
  auto* synth = app.add_subcommand("synthetic", "Generate a synthetic universe");
  std::string y_config, y_out;
  std::uint64_t y_seed = 0;
  synth->add_option("--config", y_config, "universe config JSON")->check(CLI::ExistingFile);
  auto* y_seed_opt = synth->add_option("--seed", y_seed);
  synth->add_option("--out-dir", y_out)->required();

  // report
  auto* report = app.add_subcommand("report", "Summarize workflow summary JSON files");
  std::vector<std::string> r_inputs;
  std::string r_out;
  report->add_option("summaries", r_inputs, "summary JSON files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", r_out, "CSV output (stdout if absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  auto seed_or_env = [](CLI::Option* opt, std::uint64_t value) { return opt->count() > 0 ? value : default_seed(); };

  if (*sample) {
    const auto set = load_feature_set(s_features);
    SamplerConfig sc;
    sc.kind = parse_sampler(s_sampler);
    sc.ways = s_ways;
    sc.shots = s_shots;
    sc.queries_per_class = s_queries;
    const auto eps = episode_stream(set, seed_or_env(s_seed_opt, s_seed), s_count, sc);
    emit_json(episodes_to_json(eps), s_out);
    return kExitOk;
  }
  if (*fit) {
    const auto set = load_feature_set(f_features);
    TrainConfig cfg = f_cfg;
    if (f_logreg) {
      cfg = TrainConfig::logistic_regression();
      cfg.seed = f_cfg.seed;
    }
    cfg.optimizer = parse_optimizer(f_optimizer);
    cfg.seed = seed_or_env(f_seed_opt, f_cfg.seed);
    TrainLog log;
    LinearHead head;
    if (f_logreg) {
      std::vector<int> labels(set.labels.begin(), set.labels.end());
      head = fit_logistic_regression(set.to_double(), labels, cfg, &log);
    } else {
      head = fit_linear_head(set, cfg, &log);
    }
    std::fprintf(stderr, "loss %.6f -> %.6f over %zu steps\n", log.epoch_loss.front(), log.epoch_loss.back(), log.steps);
    emit_json(head_to_json(head), f_out);
    return kExitOk;
  }
  if (*predict) {
    const auto set = load_feature_set(p_features);
    const auto head = head_from_json(load_json(p_head));
    const auto pred = predict_labels(head, set.to_double());
    std::vector<int> truth(set.labels.begin(), set.labels.end());
    std::printf("accuracy %.6f\n", accuracy(pred, truth));
    if (!p_out.empty()) {
      std::ostringstream csv;
      csv << "row,label,prediction\n";
      for (std::size_t i = 0; i < pred.size(); ++i) csv << i << ',' << truth[i] << ',' << pred[i] << '\n';
      write_or_print(csv.str(), p_out);
    }
    return kExitOk;
  }
  if (*aa) {
    const auto set = load_feature_set(a_features);
    const auto head = head_from_json(load_json(a_head));
    emit_json(subset_to_json(select_aa(set.to_double(), head, a_m)), a_out);
    return kExitOk;
  }
  if (*uot) {
    const auto target = load_feature_set(u_target);
    const auto base = load_feature_set(u_base);
    u_params.scale = u_scale == "relative" ? UotScale::kRelative : UotScale::kAbsolute;
    const auto subset =
        select_uot(class_centroids(target).centroids, class_centroids(base).centroids, u_params, u_m);
    emit_json(subset_to_json(subset), u_out);
    return kExitOk;
  }
  if (*cluster) {
    const auto base = load_feature_set(c_base);
    const auto rep_mode = parse_representation(c_mode);
    ClassPartition partition;
    if (rep_mode == Representation::kR) {
      partition = random_partition(static_cast<int>(base.num_classes()), c_l, seed_or_env(c_seed_opt, c_seed));
    } else {
      std::optional<Matrix> semantic;
      if (!c_semantic.empty()) semantic = load_feature_set(c_semantic).to_double();
      const auto rep = build_class_representation(rep_mode, class_centroids(base), semantic ? &*semantic : nullptr);
      const auto ward = ward_cluster(*rep, c_l);
      partition = ward.partition;
      partition.representation = rep_mode;
      if (!c_dendrogram.empty()) write_or_print(dendrogram_csv(ward.dendrogram), c_dendrogram);
    }
    emit_json(partition_to_json(partition), c_out);
    return kExitOk;
  }
  if (*build) {
    const auto base = load_feature_set(b_base);
    const auto partition = partition_from_json(load_json(b_partition));
    FinetuneConfig cfg;
    cfg.seed = seed_or_env(b_seed_opt, b_seed);
    std::optional<LinearHead> head;
    if (!b_head.empty()) head = head_from_json(load_json(b_head));
    const auto lib = build_library(base, partition, parse_adapter_mode(b_mode), cfg, b_jobs, head ? &*head : nullptr);
    save_library(lib, b_out);
    std::printf("library: %zu entries -> %s\n", lib.entries.size(), b_out.c_str());
    return kExitOk;
  }
  if (*ft) {
    const auto base = load_feature_set(t_base);
    const auto subset = subset_from_json(load_json(t_subset));
    FinetuneConfig cfg = t_cfg;
    cfg.seed = seed_or_env(t_seed_opt, t_cfg.seed);
    const auto result = finetune_two_step(base, subset, parse_adapter_mode(t_mode), cfg);
    save_json(adapter_to_json(result.adapter), t_out);
    if (!t_head_out.empty()) save_json(head_to_json(result.head), t_head_out);
    std::fprintf(stderr, "rows used %zu\n", result.rows_used);
    return kExitOk;
  }
  if (*heur) {
    const auto lib = load_library(h_library);
    const auto target = load_feature_set(h_target);
    const auto eps = episodes_from_json(load_json(h_episodes), target);
    const auto kinds = parse_heuristic_list(h_kinds);
    std::optional<FeatureSet> base;
    std::optional<LinearHead> head;
    if (!h_base.empty()) base = load_feature_set(h_base);
    if (!h_head.empty()) head = head_from_json(load_json(h_head));
    SelectionContext ctx;
    ctx.library = &lib;
    ctx.base = base ? &*base : nullptr;
    ctx.base_head = head ? &*head : nullptr;
    ctx.params = h_params;
    ctx.params.seed = seed_or_env(h_seed_opt, h_params.seed);
    ctx.ncm = h_ncm;
    for (const auto k : kinds) {
      if (k == HeuristicKind::kFim) {
        prepare_fim(ctx);
        break;
      }
    }
    std::ostringstream csv;
    csv << "episode,heuristic,entry,score,query_acc\n";
    char buf[160];
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const auto ev = evaluate_entries(eps[i], lib, h_ncm);
      for (const auto k : kinds) {
        const auto r = select_extractor(k, eps[i], ctx, &ev);
        std::snprintf(buf, sizeof(buf), "%zu,%s,%zu,%.6f,%.6f\n", i, heuristic_name(k).c_str(), r.selected,
                      r.scores[r.selected], r.query_accuracy);
        csv << buf;
      }
    }
    write_or_print(csv.str(), h_out);
    return kExitOk;
  }
  if (*evaluate) {
    const RunConfig base_cfg = e_flags.resolve();
    std::vector<Workflow> workflows;
    {
      std::stringstream ss(e_methods);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) workflows.push_back(parse_workflow(item));
      }
    }
    if (workflows.empty()) throw Error(ErrorCode::kConfig, "methods", "no methods given");
    // Shared episodes: sample once, then replay for each method.
    RunConfig probe = base_cfg;
    probe.workflow = workflows.front();
    auto inputs = load_workflow_inputs(probe);
    if (!inputs.episodes) {
      inputs.episodes = episode_stream(inputs.target, split_seed(base_cfg.seed, 1), base_cfg.episode_count,
                                       base_cfg.sampler);
    }
    std::string csv;
    Json summary = Json::array();
    int code = kExitOk;
    for (const auto w : workflows) {
      RunConfig c = base_cfg;
      c.workflow = w;
      c.validate(true);
      auto in = load_workflow_inputs(c);
      in.episodes = inputs.episodes;
      auto out_dir = c.output_dir;
      c.output_dir.clear();
      const auto o = run_workflow(c, in);
      print_outcome(o);
      csv += csv.empty() ? o.csv : o.csv.substr(o.csv.find('\n') + 1);
      summary.push_back(o.summary);
      if (o.exit_code != kExitOk) code = o.exit_code;
    }
    if (!base_cfg.output_dir.empty()) {
      fs::create_directories(base_cfg.output_dir);
      write_text_file(base_cfg.output_dir / "evaluate_episodes.csv", csv);
      save_json(Json{{"methods", summary}}, base_cfg.output_dir / "evaluate_summary.json");
    }
    return code;
  }
  if (*run) {
    const RunConfig cfg = r_flags.resolve();
    const auto o = run_workflow(cfg);
    print_outcome(o);
    for (const auto& f : o.failures) std::fprintf(stderr, "episode %zu: %s: %s\n", f.episode, f.code.c_str(), f.message.c_str());
    return o.exit_code;
  }
  if (*synth) {
    UniverseConfig cfg;
    if (!y_config.empty()) cfg = universe_config_from_json(load_json(y_config));
    if (y_seed_opt->count() > 0) {
      cfg.seed = y_seed;
    } else if (y_config.empty()) {
      cfg.seed = default_seed();
    }
    const auto u = generate_universe(cfg);
    save_universe(u, cfg, y_out);
    std::printf("universe: %zu base rows, %zu target rows, %zu pool rows -> %s\n", u.base.rows(), u.target.rows(),
                u.pool.rows(), y_out.c_str());
    return kExitOk;
  }
  if (*report) {
    std::ostringstream csv;
    csv << "file,method,episodes,mean_delta,half_width,baseline_mean,method_mean\n";
    char buf[256];
    for (const auto& path : r_inputs) {
      const auto doc = load_json(path);
      const Json list = doc.contains("methods") ? doc.at("methods") : Json::array({doc});
      for (const auto& s : list) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%.6f,%.6f,%.6f,%.6f\n", path.c_str(),
                      s.at("method").get<std::string>().c_str(), s.at("evaluated").get<std::size_t>(),
                      s.at("paired").at("mean_delta").get<double>(), s.at("paired").at("half_width").get<double>(),
                      s.at("unpaired").at("baseline_mean").get<double>(),
                      s.at("unpaired").at("method_mean").get<double>());
        csv << buf;
      }
    }
    write_or_print(csv.str(), r_out);
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const fewbase::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    if (e.field() == "workflow") return fewbase::kExitUsage;
    return e.code() == fewbase::ErrorCode::kConfig ? fewbase::kExitConfig : fewbase::kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return fewbase::kExitFailure;
  }
}
