#include "cvforge/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "cvforge/inspect.hpp"
#include "cvforge/result_io.hpp"
#include "cvforge/score.hpp"
#include "cvforge/stats.hpp"

namespace cvforge::cli {

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("CVFORGE_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw Error("CVFORGE_SEED is not a valid unsigned integer");
  }
}

std::string scores_csv_path(const std::string& out) {
  std::string base = out;
  if (base.size() > 5 && base.substr(base.size() - 5) == ".json")
    base = base.substr(0, base.size() - 5);
  return base + "_scores.csv";
}

}  // namespace

RunConfig parse_run_config(const Json& doc, const std::optional<std::string>& data_override,
                           const std::optional<std::uint64_t>& seed_override) {
  if (!doc.is_object()) throw Error("config must be a JSON object");
  static const std::set<std::string> top_keys = {"data",         "features", "target",
                                                 "x_types",      "pipeline", "problem_type",
                                                 "cv",           "scoring",  "seed",
                                                 "retain",       "out"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!top_keys.count(it.key())) throw Error("unknown config key \"" + it.key() + "\"");

  RunConfig cfg;

  if (data_override) {
    cfg.data_path = *data_override;
  } else {
    if (!doc.contains("data") || !doc["data"].is_string())
      throw Error("config key \"data\" (string) is required");
    cfg.data_path = doc["data"].get<std::string>();
  }

  if (!doc.contains("target") || !doc["target"].is_string())
    throw Error("config key \"target\" (string) is required");
  cfg.target = doc["target"].get<std::string>();

  if (doc.contains("features")) {
    const Json& f = doc["features"];
    if (f.is_array()) {
      cfg.features_explicit = true;
      for (const auto& e : f) {
        if (!e.is_string()) throw Error("config key \"features\" entries must be strings");
        cfg.feature_list.push_back(e.get<std::string>());
      }
      if (cfg.feature_list.empty()) throw Error("config key \"features\" must not be empty");
    } else if (f.is_object()) {
      for (auto it = f.begin(); it != f.end(); ++it)
        if (it.key() != "all_except")
          throw Error("unknown key \"" + it.key() + "\" under \"features\"");
      if (!f.contains("all_except") || !f["all_except"].is_array())
        throw Error("config key \"features.all_except\" must be an array");
      for (const auto& e : f["all_except"])
        cfg.feature_exclude.push_back(e.get<std::string>());
    } else {
      throw Error("config key \"features\" must be a list or {\"all_except\": [...]}");
    }
  }

  if (!doc.contains("problem_type") || !doc["problem_type"].is_string())
    throw Error("config key \"problem_type\" (string) is required");
  cfg.problem_type = problem_type_from_string(doc["problem_type"].get<std::string>());

  if (doc.contains("x_types")) {
    if (!doc["x_types"].is_object()) throw Error("config key \"x_types\" must be an object");
    for (auto it = doc["x_types"].begin(); it != doc["x_types"].end(); ++it) {
      if (!it.value().is_array())
        throw Error("config key \"x_types." + it.key() + "\" must be an array");
      std::vector<std::string> cols;
      for (const auto& e : it.value()) cols.push_back(e.get<std::string>());
      cfg.x_types[it.key()] = std::move(cols);
    }
  }

  if (!doc.contains("pipeline") || !doc["pipeline"].is_array() || doc["pipeline"].empty())
    throw Error("config key \"pipeline\" (non-empty array) is required");
  cfg.pipeline.problem_type = cfg.problem_type;
  for (const auto& entry : doc["pipeline"]) {
    if (!entry.is_object()) throw Error("pipeline steps must be objects");
    static const std::set<std::string> step_keys = {"kind", "name", "params", "apply_to"};
    for (auto it = entry.begin(); it != entry.end(); ++it)
      if (!step_keys.count(it.key()))
        throw Error("unknown key \"" + it.key() + "\" in pipeline step");
    if (!entry.contains("kind") || !entry["kind"].is_string())
      throw Error("pipeline step requires \"kind\"");
    std::string kind = entry["kind"].get<std::string>();
    if (entry.contains("apply_to") && is_model_kind(kind))
      throw Error("\"apply_to\" is not valid on the model step \"" + kind + "\"");
    ColumnSelector sel = entry.contains("apply_to")
                             ? ColumnSelector::from_json(entry["apply_to"])
                             : ColumnSelector::all_features();
    cfg.pipeline.add_step(kind, entry.value("params", Json::object()), sel,
                          entry.value("name", std::string{}));
  }
  cfg.pipeline.validate();

  if (!doc.contains("cv")) throw Error("config key \"cv\" is required");
  cfg.scheme = CVScheme::from_json(doc["cv"]);

  if (!doc.contains("scoring") || !doc["scoring"].is_array() || doc["scoring"].empty())
    throw Error("config key \"scoring\" (non-empty array) is required");
  for (const auto& m : doc["scoring"]) {
    if (!m.is_string()) throw Error("config key \"scoring\" entries must be strings");
    std::string name = m.get<std::string>();
    if (!metric_valid_for(name, cfg.problem_type))
      throw Error("scoring metric \"" + name + "\" is not valid for " +
                  to_string(cfg.problem_type));
    cfg.scoring.push_back(name);
  }

  if (seed_override) {
    cfg.seed = *seed_override;
  } else if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
      throw Error("config key \"seed\" must be a non-negative integer");
    long long s = doc["seed"].get<long long>();
    if (s < 0) throw Error("config key \"seed\" must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (auto es = env_seed()) {
    cfg.seed = *es;
  }

  if (doc.contains("retain")) {
    if (!doc["retain"].is_boolean()) throw Error("config key \"retain\" must be a boolean");
    cfg.retain = doc["retain"].get<bool>();
  }
  if (doc.contains("out")) {
    if (!doc["out"].is_string()) throw Error("config key \"out\" must be a string");
    cfg.out_path = doc["out"].get<std::string>();
  }

  // Effective config, echoed verbatim into the result file.
  cfg.echo = Json::object();
  cfg.echo["data"] = cfg.data_path;
  if (cfg.features_explicit)
    cfg.echo["features"] = cfg.feature_list;
  else
    cfg.echo["features"] = Json{{"all_except", cfg.feature_exclude}};
  cfg.echo["target"] = cfg.target;
  Json xt = Json::object();
  for (const auto& [type, cols] : cfg.x_types) xt[type] = cols;
  cfg.echo["x_types"] = xt;
  cfg.echo["pipeline"] = cfg.pipeline.to_json();
  cfg.echo["problem_type"] = to_string(cfg.problem_type);
  cfg.echo["cv"] = cfg.scheme.to_json();
  cfg.echo["scoring"] = cfg.scoring;
  cfg.echo["seed"] = cfg.seed;
  cfg.echo["retain"] = cfg.retain;
  return cfg;
}

std::vector<std::string> resolve_features(const RunConfig& cfg, const Table& table) {
  std::vector<std::string> out;
  if (cfg.features_explicit) {
    for (const auto& f : cfg.feature_list)
      if (!table.has_column(f)) throw Error("feature column not found: " + f);
    std::set<std::string> wanted(cfg.feature_list.begin(), cfg.feature_list.end());
    for (const auto& c : table.column_names())
      if (wanted.count(c)) out.push_back(c);
  } else {
    std::set<std::string> excluded(cfg.feature_exclude.begin(), cfg.feature_exclude.end());
    excluded.insert(cfg.target);
    // A group column used for splitting is never a feature.
    if (cfg.scheme.kind == CVScheme::Kind::group_kfold)
      excluded.insert(cfg.scheme.group_column);
    for (const auto& c : table.column_names())
      if (!excluded.count(c)) out.push_back(c);
  }
  if (out.empty()) throw Error("feature resolution produced no columns");
  return out;
}

int cmd_run(const RunArgs& args) {
  Json doc;
  RunConfig cfg;
  try {
    doc = load_json(args.config_path);
    cfg = parse_run_config(doc, args.data_override, args.seed_override);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  Table table;
  try {
    table = read_csv(cfg.data_path);
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }

  std::vector<std::string> features;
  FeatureTypeMap types;
  try {
    features = resolve_features(cfg, table);
    types = FeatureTypeMap::from_assignments(cfg.x_types, table);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  CVResult result;
  try {
    RunOptions opts;
    opts.jobs = args.jobs;
    opts.retain_pipelines = cfg.retain;
    result = run_cross_validation(table, features, cfg.target, types, cfg.pipeline,
                                  cfg.scheme, cfg.scoring, nullptr, cfg.seed, opts);
  } catch (const Error& e) {
    std::cerr << "cv error: " << e.what() << "\n";
    return kExitRuntime;
  }

  std::string out = args.out_override.value_or(
      cfg.out_path.empty() ? std::string("result.json") : cfg.out_path);
  try {
    save_json(result_to_json(result, cfg.echo), out);

    std::ofstream csv(scores_csv_path(out), std::ios::binary);
    if (!csv) throw Error("cannot write file: " + scores_csv_path(out));
    csv << "repeat,fold,metric,value,n_train,n_test\n";
    for (const auto& r : result.scores)
      csv << r.repeat << ',' << r.fold << ',' << r.metric << ',' << r.value << ','
          << r.n_train << ',' << r.n_test << "\n";
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }

  std::cout << "result written to " << out << "\n";
  for (const auto& metric : result.metrics) {
    auto v = result.metric_scores(metric);
    double m = numerics::mean(v);
    double sd = v.size() > 1 ? std::sqrt(numerics::sample_variance(v)) : 0.0;
    std::cout << "  " << metric << ": " << m << " +- " << sd << " (" << v.size()
              << " folds)\n";
  }
  for (const auto& w : result.warnings) std::cout << "  warning: " << w << "\n";
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& result_paths, const std::string& metric,
                const std::string& out_path) {
  if (result_paths.size() < 2) {
    std::cerr << "compare: need at least 2 result files\n";
    return kExitConfig;
  }
  std::vector<CVResult> loaded;
  std::vector<std::string> names;
  try {
    for (const auto& p : result_paths) {
      loaded.push_back(result_from_json(load_json(p)));
      std::string stem = std::filesystem::path(p).stem().string();
      while (std::find(names.begin(), names.end(), stem) != names.end()) stem += "_";
      names.push_back(stem);
    }
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }

  for (std::size_t i = 1; i < loaded.size(); ++i) {
    if (!fold_plans_match(loaded[0].plan, loaded[i].plan)) {
      std::cerr << "fold-plan mismatch between " << names[0] << " and " << names[i]
                << "; results are not comparable\n";
      return kExitMismatch;
    }
  }

  std::string use_metric = metric;
  if (use_metric.empty()) {
    if (loaded[0].metrics.empty()) {
      std::cerr << "no metrics found in " << names[0] << "\n";
      return kExitData;
    }
    use_metric = loaded[0].metrics[0];
  }

  ComparisonTable table;
  try {
    std::vector<std::pair<std::string, const CVResult*>> refs;
    for (std::size_t i = 0; i < loaded.size(); ++i) refs.emplace_back(names[i], &loaded[i]);
    table = compare_all(refs, use_metric);
  } catch (const Error& e) {
    std::cerr << "compare error: " << e.what() << "\n";
    return kExitRuntime;
  }

  Json j = Json::object();
  j["metric"] = table.metric;
  Json rows = Json::array();
  for (const auto& r : table.rows) {
    Json row = Json::object();
    row["name_a"] = r.name_a;
    row["name_b"] = r.name_b;
    row["t"] = r.test.t;
    row["df"] = r.test.df;
    row["p"] = r.test.p;
    row["mean_a"] = r.mean_a;
    row["mean_b"] = r.mean_b;
    row["degenerate"] = r.test.degenerate;
    rows.push_back(std::move(row));
  }
  j["pairs"] = std::move(rows);

  std::string out = out_path.empty() ? std::string("comparison.json") : out_path;
  try {
    save_json(j, out);
    std::ofstream csv(scores_csv_path(out), std::ios::binary);
    if (!csv) throw Error("cannot write file: " + scores_csv_path(out));
    csv << "pipeline,repeat,fold,metric,value\n";
    for (const auto& row : table.long_scores)
      csv << row["pipeline"].get<std::string>() << ',' << row["repeat"].get<int>() << ','
          << row["fold"].get<int>() << ',' << row["metric"].get<std::string>() << ','
          << row["value"].get<double>() << "\n";
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  std::cout << render_comparison_text(table);
  std::cout << "comparison written to " << out << "\n";
  return kExitOk;
}

int cmd_inspect(const std::string& result_path, const std::string& fold_spec,
                const std::string& what, const std::string& out_path) {
  CVResult result;
  try {
    result = result_from_json(load_json(result_path));
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }

  std::optional<std::pair<int, int>> fold_filter;
  if (!fold_spec.empty()) {
    auto colon = fold_spec.find(':');
    try {
      if (colon == std::string::npos) throw Error("expected R:F");
      fold_filter = {std::stoi(fold_spec.substr(0, colon)),
                     std::stoi(fold_spec.substr(colon + 1))};
    } catch (const std::exception&) {
      std::cerr << "invalid --fold value \"" << fold_spec << "\" (expected R:F)\n";
      return kExitConfig;
    }
    bool found = false;
    for (const auto& f : result.plan)
      if (f.repeat == fold_filter->first && f.fold == fold_filter->second) found = true;
    if (!found) {
      std::cerr << "fold (" << fold_filter->first << ":" << fold_filter->second
                << ") out of range for this result\n";
      return kExitMissing;
    }
  }

  if (what == "predictions") {
    Table preds;
    try {
      preds = inspect::fold_predictions(result);
    } catch (const Error& e) {
      std::cerr << e.what() << "\n";
      return kExitMissing;
    }
    if (fold_filter) {
      std::vector<int> keep;
      const auto& rep = preds.numeric("repeat");
      const auto& fld = preds.numeric("fold");
      for (std::size_t i = 0; i < preds.n_rows(); ++i)
        if (static_cast<int>(rep[i]) == fold_filter->first &&
            static_cast<int>(fld[i]) == fold_filter->second)
          keep.push_back(static_cast<int>(i));
      preds = preds.take_rows(keep);
    }
    if (out_path.empty()) {
      write_csv(preds, std::cout);
    } else {
      write_csv(preds, out_path);
      std::cout << "predictions written to " << out_path << "\n";
    }
    return kExitOk;
  }

  if (what == "params") {
    bool any = false;
    for (const auto& c : result.chosen_params)
      if (!c.empty()) any = true;
    if (!any && result.chosen_params.empty()) {
      std::cerr << "chosen parameters were not retained in this result\n";
      return kExitMissing;
    }
    Json j = Json::array();
    for (std::size_t i = 0; i < result.plan.size(); ++i) {
      if (fold_filter && (result.plan[i].repeat != fold_filter->first ||
                          result.plan[i].fold != fold_filter->second))
        continue;
      Json row = Json::object();
      row["repeat"] = result.plan[i].repeat;
      row["fold"] = result.plan[i].fold;
      row["params"] = result.chosen_params[i];
      j.push_back(std::move(row));
    }
    if (out_path.empty()) {
      std::cout << j.dump(2) << "\n";
    } else {
      save_json(j, out_path);
      std::cout << "params written to " << out_path << "\n";
    }
    return kExitOk;
  }

  std::cerr << "unknown --what value \"" << what << "\" (expected predictions or params)\n";
  return kExitConfig;
}

int cmd_preprocess(const std::string& config_path, const std::string& until_step,
                   const std::string& out_path) {
  RunConfig cfg;
  try {
    cfg = parse_run_config(load_json(config_path), std::nullopt, std::nullopt);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  // Named step must exist and must not be the model.
  std::size_t until_index = cfg.pipeline.steps.size();
  for (std::size_t i = 0; i < cfg.pipeline.steps.size(); ++i)
    if (cfg.pipeline.steps[i].name == until_step) until_index = i;
  if (until_index == cfg.pipeline.steps.size()) {
    std::cerr << "config error: unknown step \"" << until_step << "\"\n";
    return kExitConfig;
  }
  if (cfg.pipeline.steps[until_index].is_model) {
    std::cerr << "config error: model step not preprocessable\n";
    return kExitConfig;
  }

  Table table;
  try {
    table = read_csv(cfg.data_path);
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }

  try {
    std::vector<std::string> features = resolve_features(cfg, table);
    FeatureTypeMap types = FeatureTypeMap::from_assignments(cfg.x_types, table);
    TargetView target = TargetView::from_table(table, cfg.target, cfg.problem_type);

    // Grid axes resolve to their first candidate; this path is
    // inspection-only and never cross-validated.
    auto axes = grid_axes(cfg.pipeline);
    PipelineSpec resolved =
        resolve_combination(cfg.pipeline, axes, std::vector<std::size_t>(axes.size(), 0));

    std::cerr << "note: preprocessing fitted on the FULL dataset "
                 "(inspection only, not cross-validated)\n";
    DataState state{table, features, types};
    std::vector<std::string> warnings;
    for (std::size_t i = 0; i <= until_index; ++i) {
      const StepSpec& step = resolved.steps[i];
      TransformerSpec ts{step.kind, step.params, step.apply_to};
      auto fitted = fit_transformer(ts, state, target, warnings);
      state = fitted->apply(state);
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (out_path.empty()) {
      write_csv(state.table, std::cout);
    } else {
      write_csv(state.table, out_path);
      std::cout << "preprocessed data written to " << out_path << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "cv error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"cvforge: leakage-free cross-validated pipeline evaluation"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run cross-validation from a config file");
  std::string run_config, run_data, run_out;
  std::uint64_t run_seed = 0;
  bool run_seed_set = false;
  int run_jobs = 1;
  run->add_option("--config", run_config, "config JSON path")->required();
  run->add_option("--data", run_data, "override the config's data CSV path");
  auto* seed_opt = run->add_option("--seed", run_seed, "override the seed");
  run->add_option("--jobs", run_jobs, "parallel fold workers")->check(CLI::PositiveNumber);
  run->add_option("--out", run_out, "result JSON output path");

  // compare
  auto* compare = app.add_subcommand("compare", "corrected t-test over result files");
  std::vector<std::string> cmp_files;
  std::string cmp_metric, cmp_out;
  compare->add_option("results", cmp_files, "result JSON files")->expected(-2);
  compare->add_option("--metric", cmp_metric, "metric to compare");
  compare->add_option("--out", cmp_out, "comparison JSON output path");

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "export fold predictions or params");
  std::string ins_file, ins_fold, ins_what = "predictions", ins_out;
  inspect_cmd->add_option("result", ins_file, "result JSON file")->required();
  inspect_cmd->add_option("--fold", ins_fold, "restrict to repeat:fold (e.g. 0:3)");
  inspect_cmd->add_option("--what", ins_what, "predictions or params");
  inspect_cmd->add_option("--out", ins_out, "output path (stdout when omitted)");

  // preprocess
  auto* prep = app.add_subcommand("preprocess", "apply the pipeline prefix to the full data");
  std::string prep_config, prep_until, prep_out;
  prep->add_option("--config", prep_config, "config JSON path")->required();
  prep->add_option("--until", prep_until, "step name to stop after")->required();
  prep->add_option("--out", prep_out, "output CSV path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*run) {
    run_seed_set = seed_opt->count() > 0;
    RunArgs args;
    args.config_path = run_config;
    if (!run_data.empty()) args.data_override = run_data;
    if (run_seed_set) args.seed_override = run_seed;
    args.jobs = run_jobs;
    if (!run_out.empty()) args.out_override = run_out;
    return cmd_run(args);
  }
  if (*compare) return cmd_compare(cmp_files, cmp_metric, cmp_out);
  if (*inspect_cmd) return cmd_inspect(ins_file, ins_fold, ins_what, ins_out);
  if (*prep) return cmd_preprocess(prep_config, prep_until, prep_out);
  return kExitConfig;
}

}  // namespace cvforge::cli
