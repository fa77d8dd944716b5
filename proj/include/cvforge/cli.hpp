#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cvforge/cv.hpp"

namespace cvforge::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;    // invalid config (message names the key)
inline constexpr int kExitData = 3;      // data/file error
inline constexpr int kExitRuntime = 4;   // CV/runtime error (fold identified)
inline constexpr int kExitMismatch = 5;  // fold-plan mismatch in compare
inline constexpr int kExitMissing = 6;   // requested artifacts not retained

/// Fully validated run configuration (single JSON document, unknown keys
/// rejected).
struct RunConfig {
  std::string data_path;
  // Feature columns: an explicit list, or "all but listed" (target always
  // excluded). Resolved against the data header by resolve_features().
  std::vector<std::string> feature_list;
  std::vector<std::string> feature_exclude;
  bool features_explicit = false;
  std::string target;
  std::map<std::string, std::vector<std::string>> x_types;
  ProblemType problem_type = ProblemType::regression;
  PipelineSpec pipeline;
  CVScheme scheme;
  std::vector<std::string> scoring;
  std::uint64_t seed = 0;
  bool retain = false;
  std::string out_path;
  Json echo = Json::object();  // effective config, echoed into the result
};

/// Parses and validates the config document; `data_override`, `seed_override`
/// take precedence, then config values, then the CVFORGE_SEED environment
/// variable. Feature resolution happens against the loaded table.
RunConfig parse_run_config(const Json& doc, const std::optional<std::string>& data_override,
                           const std::optional<std::uint64_t>& seed_override);

/// Concrete feature column list for a loaded table, in header order.
std::vector<std::string> resolve_features(const RunConfig& cfg, const Table& table);

struct RunArgs {
  std::string config_path;
  std::optional<std::string> data_override;
  std::optional<std::uint64_t> seed_override;
  int jobs = 1;
  std::optional<std::string> out_override;
};

int cmd_run(const RunArgs& args);
int cmd_compare(const std::vector<std::string>& result_paths, const std::string& metric,
                const std::string& out_path);
int cmd_inspect(const std::string& result_path, const std::string& fold_spec,
                const std::string& what, const std::string& out_path);
int cmd_preprocess(const std::string& config_path, const std::string& until_step,
                   const std::string& out_path);

/// CLI11-based entry point used by the cvforge binary.
int cli_main(int argc, char** argv);

}  // namespace cvforge::cli
