#include "cvforge/result_io.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cvforge {

namespace {

std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << "fnv1a:" << std::hex << std::setfill('0') << std::setw(16) << h;
  return os.str();
}

std::uint64_t hash_from_hex(const std::string& s) {
  if (s.rfind("fnv1a:", 0) != 0) throw Error("bad train_idx_hash: " + s);
  return std::stoull(s.substr(6), nullptr, 16);
}

}  // namespace

Json result_to_json(const CVResult& result, const Json& config_echo) {
  Json j = Json::object();
  j["schema_version"] = 1;
  j["config_echo"] = config_echo;
  j["problem_type"] = to_string(result.problem_type);
  j["seed"] = result.seed;

  Json plan = Json::array();
  for (const auto& f : result.plan) {
    Json fp = Json::object();
    fp["repeat"] = f.repeat;
    fp["fold"] = f.fold;
    fp["train_idx_hash"] = hash_hex(f.train_hash);
    fp["test_idx"] = f.test_idx;
    fp["n_train"] = f.n_train;
    fp["n_test"] = f.n_test;
    plan.push_back(std::move(fp));
  }
  j["fold_plan"] = std::move(plan);

  Json scores = Json::array();
  for (const auto& r : result.scores) {
    Json s = Json::object();
    s["repeat"] = r.repeat;
    s["fold"] = r.fold;
    s["metric"] = r.metric;
    s["value"] = r.value;
    scores.push_back(std::move(s));
  }
  j["scores"] = std::move(scores);

  Json chosen = Json::array();
  for (std::size_t i = 0; i < result.plan.size(); ++i) {
    Json c = Json::object();
    c["repeat"] = result.plan[i].repeat;
    c["fold"] = result.plan[i].fold;
    c["params"] = result.chosen_params[i];
    chosen.push_back(std::move(c));
  }
  j["chosen_params"] = std::move(chosen);

  Json preds = Json::array();
  bool classification = result.problem_type == ProblemType::classification;
  for (std::size_t i = 0; i < result.plan.size(); ++i) {
    const FoldInfo& f = result.plan[i];
    Json p = Json::object();
    p["repeat"] = f.repeat;
    p["fold"] = f.fold;
    if (classification) {
      Json yt = Json::array(), yp = Json::array();
      for (std::size_t k = 0; k < f.test_idx.size(); ++k)
        yt.push_back(result.y_true_labels[static_cast<std::size_t>(f.test_idx[k])]);
      for (const auto& l : result.pred_labels[i]) yp.push_back(l);
      p["y_true"] = std::move(yt);
      p["y_pred"] = std::move(yp);
    } else {
      Json yt = Json::array(), yp = Json::array();
      for (std::size_t k = 0; k < f.test_idx.size(); ++k)
        yt.push_back(result.y_true_values[static_cast<std::size_t>(f.test_idx[k])]);
      for (double v : result.pred_values[i]) yp.push_back(v);
      p["y_true"] = std::move(yt);
      p["y_pred"] = std::move(yp);
    }
    preds.push_back(std::move(p));
  }
  j["predictions"] = std::move(preds);
  j["warnings"] = result.warnings;
  return j;
}

CVResult result_from_json(const Json& j) {
  if (!j.is_object() || j.value("schema_version", 0) != 1)
    throw Error("unsupported or missing result schema_version");
  CVResult r;
  r.problem_type = problem_type_from_string(j.at("problem_type").get<std::string>());
  r.seed = j.value("seed", 0ull);

  std::size_t n_max = 0;
  for (const auto& fp : j.at("fold_plan")) {
    FoldInfo f;
    f.repeat = fp.at("repeat").get<int>();
    f.fold = fp.at("fold").get<int>();
    f.train_hash = hash_from_hex(fp.at("train_idx_hash").get<std::string>());
    f.test_idx = fp.at("test_idx").get<std::vector<int>>();
    f.n_train = fp.at("n_train").get<int>();
    f.n_test = fp.at("n_test").get<int>();
    for (int i : f.test_idx)
      n_max = std::max(n_max, static_cast<std::size_t>(i) + 1);
    r.plan.push_back(std::move(f));
  }

  for (const auto& s : j.at("scores")) {
    ScoreRecord rec;
    rec.repeat = s.at("repeat").get<int>();
    rec.fold = s.at("fold").get<int>();
    rec.metric = s.at("metric").get<std::string>();
    rec.value = s.at("value").get<double>();
    if (std::find(r.metrics.begin(), r.metrics.end(), rec.metric) == r.metrics.end())
      r.metrics.push_back(rec.metric);
    r.scores.push_back(std::move(rec));
  }

  r.chosen_params.resize(r.plan.size(), Json::object());
  if (j.contains("chosen_params")) {
    std::size_t i = 0;
    for (const auto& c : j.at("chosen_params")) {
      if (i < r.chosen_params.size()) r.chosen_params[i] = c.value("params", Json::object());
      ++i;
    }
  }

  bool classification = r.problem_type == ProblemType::classification;
  r.pred_values.resize(r.plan.size());
  r.pred_labels.resize(r.plan.size());
  if (classification)
    r.y_true_labels.resize(n_max);
  else
    r.y_true_values.resize(n_max, 0.0);
  if (j.contains("predictions")) {
    std::size_t i = 0;
    for (const auto& p : j.at("predictions")) {
      if (i >= r.plan.size()) break;
      const auto& test_idx = r.plan[i].test_idx;
      if (classification) {
        r.pred_labels[i] = p.value("y_pred", std::vector<std::string>{});
        auto yt = p.value("y_true", std::vector<std::string>{});
        for (std::size_t k = 0; k < yt.size() && k < test_idx.size(); ++k)
          r.y_true_labels[static_cast<std::size_t>(test_idx[k])] = yt[k];
      } else {
        r.pred_values[i] = p.value("y_pred", std::vector<double>{});
        auto yt = p.value("y_true", std::vector<double>{});
        for (std::size_t k = 0; k < yt.size() && k < test_idx.size(); ++k)
          r.y_true_values[static_cast<std::size_t>(test_idx[k])] = yt[k];
      }
      ++i;
    }
  }
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

void save_json(const Json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << j.dump(2) << "\n";
}

Json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  try {
    return Json::parse(in);
  } catch (const std::exception& e) {
    throw Error("invalid JSON in " + path + ": " + e.what());
  }
}

}  // namespace cvforge
