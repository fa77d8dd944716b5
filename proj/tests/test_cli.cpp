#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
// End-to-end tests driving the installed binary (path injected via
// CVFORGE_BIN; bundled fixture files via TEST_DATA_DIR).

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cvforge/result_io.hpp"
#include "doctest.h"

using cvforge::Json;

namespace {

struct RunOutput {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunOutput run_cli(const std::string& args) {
  std::string cmd = std::string(CVFORGE_BIN) + " " + args + " 2>&1";
  std::array<char, 4096> buf;
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

std::string data_dir() { return TEST_DATA_DIR; }

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  f << contents;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

std::string minimal_config(const std::string& extra = "") {
  return "{\n"
         "  \"data\": \"" + data_dir() + "/golden.csv\",\n"
         "  \"target\": \"y\",\n"
         "  \"problem_type\": \"regression\",\n"
         "  \"pipeline\": [{\"kind\": \"dummy\"}],\n"
         "  \"cv\": {\"kind\": \"kfold\", \"k\": 5, \"shuffle\": true},\n"
         "  \"scoring\": [\"neg_mean_absolute_error\"],\n"
         "  \"seed\": 11" + extra + "\n"
         "}\n";
}

}  // namespace

TEST_CASE("run: minimal config exits 0 with five score records") {
  write_file("cli_min.json", minimal_config());
  auto r = run_cli("run --config cli_min.json --out cli_min_result.json");
  CHECK(r.exit_code == 0);
  Json res = cvforge::load_json("cli_min_result.json");
  CHECK(res["scores"].size() == 5);
  std::remove("cli_min.json");
  std::remove("cli_min_result.json");
  std::remove("cli_min_result_scores.csv");
}

TEST_CASE("run: unknown step kind exits 2 and names the kind") {
  write_file("cli_bad.json",
             "{\"data\": \"" + data_dir() + "/golden.csv\", \"target\": \"y\","
             "\"problem_type\": \"regression\","
             "\"pipeline\": [{\"kind\": \"pls\"}],"
             "\"cv\": {\"kind\": \"kfold\", \"k\": 5},"
             "\"scoring\": [\"r2\"], \"seed\": 1}");
  auto r = run_cli("run --config cli_bad.json");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("pls") != std::string::npos);
  std::remove("cli_bad.json");
}

TEST_CASE("run: unknown config key exits 2 and names the key") {
  write_file("cli_key.json", minimal_config(",\n  \"foobar\": 1"));
  auto r = run_cli("run --config cli_key.json");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("foobar") != std::string::npos);
  std::remove("cli_key.json");
}

TEST_CASE("run: missing data file exits 3") {
  write_file("cli_nodata.json",
             "{\"data\": \"does_not_exist.csv\", \"target\": \"y\","
             "\"problem_type\": \"regression\","
             "\"pipeline\": [{\"kind\": \"dummy\"}],"
             "\"cv\": {\"kind\": \"kfold\", \"k\": 5},"
             "\"scoring\": [\"r2\"], \"seed\": 1}");
  auto r = run_cli("run --config cli_nodata.json");
  CHECK(r.exit_code == 3);
  std::remove("cli_nodata.json");
}

TEST_CASE("run: three pipelines sharing a seed share one fold plan") {
  const char* models[] = {"dummy", "linear_reg", "ridge"};
  std::vector<Json> plans;
  for (int i = 0; i < 3; ++i) {
    std::string cfg =
        "{\"data\": \"" + data_dir() + "/golden.csv\", \"target\": \"y\","
        "\"problem_type\": \"regression\","
        "\"pipeline\": [{\"kind\": \"zscore\"}, {\"kind\": \"" +
        std::string(models[i]) + "\"}],"
        "\"cv\": {\"kind\": \"kfold\", \"k\": 5, \"shuffle\": true},"
        "\"scoring\": [\"neg_mean_absolute_error\"], \"seed\": 31}";
    std::string name = "cli_m" + std::to_string(i);
    write_file(name + ".json", cfg);
    auto r = run_cli("run --config " + name + ".json --out " + name + "_res.json");
    REQUIRE(r.exit_code == 0);
    plans.push_back(cvforge::load_json(name + "_res.json")["fold_plan"]);
  }
  CHECK(plans[0] == plans[1]);
  CHECK(plans[1] == plans[2]);

  // comparable results: compare exits 0 with C(3,2)=3 pairs
  auto cmp = run_cli("compare cli_m0_res.json cli_m1_res.json cli_m2_res.json "
                     "--out cli_cmp.json");
  CHECK(cmp.exit_code == 0);
  Json table = cvforge::load_json("cli_cmp.json");
  CHECK(table["pairs"].size() == 3);

  for (int i = 0; i < 3; ++i) {
    std::string name = "cli_m" + std::to_string(i);
    std::remove((name + ".json").c_str());
    std::remove((name + "_res.json").c_str());
    std::remove((name + "_res_scores.csv").c_str());
  }
  std::remove("cli_cmp.json");
  std::remove("cli_cmp_scores.csv");
}

TEST_CASE("compare: mismatched seeds exit 5") {
  write_file("cli_s1.json", minimal_config());
  auto r1 = run_cli("run --config cli_s1.json --out cli_s1_res.json");
  REQUIRE(r1.exit_code == 0);
  auto r2 = run_cli("run --config cli_s1.json --seed 99 --out cli_s2_res.json");
  REQUIRE(r2.exit_code == 0);
  auto cmp = run_cli("compare cli_s1_res.json cli_s2_res.json");
  CHECK(cmp.exit_code == 5);
  CHECK(cmp.output.find("mismatch") != std::string::npos);
  for (const char* f : {"cli_s1.json", "cli_s1_res.json", "cli_s1_res_scores.csv",
                        "cli_s2_res.json", "cli_s2_res_scores.csv"})
    std::remove(f);
}

TEST_CASE("inspect: predictions cover the dataset, params match the result json") {
  write_file("cli_i.json",
             "{\"data\": \"" + data_dir() + "/golden.csv\", \"target\": \"y\","
             "\"problem_type\": \"regression\","
             "\"pipeline\": [{\"kind\": \"ridge\", \"params\": {\"lambda\": [0.1, 1.0]}}],"
             "\"cv\": {\"kind\": \"kfold\", \"k\": 5, \"shuffle\": true},"
             "\"scoring\": [\"r2\"], \"seed\": 2, \"retain\": true}");
  auto r = run_cli("run --config cli_i.json --out cli_i_res.json");
  REQUIRE(r.exit_code == 0);

  auto preds = run_cli("inspect cli_i_res.json --what predictions");
  CHECK(preds.exit_code == 0);
  CHECK(count_lines(preds.output) == 51);  // header + one row per sample

  auto params = run_cli("inspect cli_i_res.json --what params");
  CHECK(params.exit_code == 0);
  Json from_cli = Json::parse(params.output);
  Json res = cvforge::load_json("cli_i_res.json");
  REQUIRE(from_cli.size() == 5);
  for (int f = 0; f < 5; ++f)
    CHECK(from_cli[f]["params"] == res["chosen_params"][f]["params"]);

  auto bad_fold = run_cli("inspect cli_i_res.json --fold 0:7");
  CHECK(bad_fold.exit_code == 6);
  CHECK(bad_fold.output.find("out of range") != std::string::npos);

  std::remove("cli_i.json");
  std::remove("cli_i_res.json");
  std::remove("cli_i_res_scores.csv");
}

TEST_CASE("preprocess: standardizes until the named step, refuses the model") {
  write_file("cli_p.json",
             "{\"data\": \"" + data_dir() + "/golden.csv\", \"target\": \"y\","
             "\"problem_type\": \"regression\","
             "\"pipeline\": [{\"kind\": \"zscore\"}, {\"kind\": \"dummy\"}],"
             "\"cv\": {\"kind\": \"kfold\", \"k\": 5},"
             "\"scoring\": [\"r2\"], \"seed\": 2}");
  auto r = run_cli("preprocess --config cli_p.json --until zscore --out cli_p_out.csv");
  CHECK(r.exit_code == 0);

  // standardized columns have mean ~0: crude check via the emitted CSV
  std::string csv = slurp("cli_p_out.csv");
  CHECK(count_lines(csv) == 51);

  auto bad = run_cli("preprocess --config cli_p.json --until dummy");
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("not preprocessable") != std::string::npos);

  std::remove("cli_p.json");
  std::remove("cli_p_out.csv");
}

TEST_CASE("golden file: pinned config and seed reproduce the committed result") {
  // run from the fixture directory so the echoed data path stays relative
  std::string out = std::filesystem::absolute("cli_golden_out.json").string();
  std::string cmd = "cd " + data_dir() + " && " + CVFORGE_BIN +
                    " run --config golden_config.json --out " + out + " > /dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(slurp("cli_golden_out.json") == slurp(data_dir() + "/golden_result.json"));
  std::remove("cli_golden_out.json");
  std::remove("cli_golden_out_scores.csv");
}

TEST_CASE("environment seed is the lowest-priority fallback") {
  write_file("cli_e.json", minimal_config());
  // config seed (11) wins over the environment
  auto r = run_cli("run --config cli_e.json --out cli_e1.json");
  REQUIRE(r.exit_code == 0);
  CHECK(cvforge::load_json("cli_e1.json")["seed"].get<int>() == 11);

  // without a config seed the environment variable applies
  std::string noseed =
      "{\"data\": \"" + data_dir() + "/golden.csv\", \"target\": \"y\","
      "\"problem_type\": \"regression\","
      "\"pipeline\": [{\"kind\": \"dummy\"}],"
      "\"cv\": {\"kind\": \"kfold\", \"k\": 5},"
      "\"scoring\": [\"r2\"]}";
  write_file("cli_e2.json", noseed);
  std::string cmd = std::string("CVFORGE_SEED=77 ") + CVFORGE_BIN +
                    " run --config cli_e2.json --out cli_e2_res.json 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(cvforge::load_json("cli_e2_res.json")["seed"].get<int>() == 77);

  for (const char* f : {"cli_e.json", "cli_e1.json", "cli_e1_scores.csv", "cli_e2.json",
                        "cli_e2_res.json", "cli_e2_res_scores.csv"})
    std::remove(f);
}
