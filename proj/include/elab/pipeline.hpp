#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "elab/compare.hpp"
#include "elab/confounder.hpp"
#include "elab/features.hpp"
#include "elab/lime.hpp"
#include "elab/model.hpp"
#include "elab/shapley.hpp"
#include "elab/synthetic.hpp"

namespace elab {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// A course is either generated from a synthetic config or imported from a
/// directory holding schedule.json, events.jsonl and labels.csv.
struct CourseInput {
  std::string course_id;
  std::optional<SyntheticConfig> synthetic;
  std::optional<std::filesystem::path> path;
};

struct ExplainSettings {
  std::vector<Method> methods{Method::LIME, Method::SHAP, Method::Confounder};
  std::size_t n_per_class = 50;
  LimeConfig lime;
  KernelShapConfig shap;
  ConfounderConfig confounder;
};

struct CompareSettings {
  std::vector<Metric> metrics{Metric::Jaccard, Metric::Spearman};
  std::size_t k = 10;
};

struct PipelineConfig {
  std::uint64_t seed = 42;
  std::filesystem::path out = "elab-out";
  int workers = 1;  // 0 means one per hardware thread
  std::optional<std::string> preset;
  std::vector<CourseInput> courses;
  ExtractOptions extract;
  SplitSpec split;
  TrainConfig train;
  ExplainSettings explain;
  CompareSettings compare;

  /// Throws ValidationError on the first inconsistency.
  void validate() const;
};

/// Builds a config from JSON on top of the defaults. Relative course paths
/// resolve against `base_dir`. Unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
/// Replaces the course list with a preset's courses.
void apply_preset(PipelineConfig& config, std::string_view name);
/// Canonical form of every output-affecting setting (out and workers excluded).
nlohmann::ordered_json config_to_json(const PipelineConfig& config);
std::string config_hash(const PipelineConfig& config);

enum class Stage { Generate, Extract, Train, Explain, Compare, Report };
std::string_view stage_name(Stage s);

/// Each stage reads the previous stage's files under config.out and records
/// its inputs and outputs in manifest.json. Missing inputs raise
/// MissingInputError.
void run_generate(const PipelineConfig& config);
void run_extract(const PipelineConfig& config);
void run_train(const PipelineConfig& config);
void run_explain(const PipelineConfig& config);
void run_compare(const PipelineConfig& config);
void run_report(const PipelineConfig& config);
void run_stage(const PipelineConfig& config, Stage stage);
void run_pipeline(const PipelineConfig& config);

/// Calls fn(i) for i in [0, n) on up to `workers` threads. The first
/// exception by index is rethrown after all workers finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Explains one instance with the given method.
Explanation explain_instance(Method method, const Predictor& predictor, std::span<const double> instance,
                             const Background& background, const ExplainSettings& settings, std::uint64_t seed,
                             double threshold);

// Output layout helpers, relative to config.out.
std::filesystem::path course_dir(const PipelineConfig& config, std::string_view course_id);
std::vector<std::string> course_ids(const PipelineConfig& config);
/// Consecutive course pairs (0,1), (2,3), ...; a trailing course forms a group of one.
std::vector<std::vector<std::string>> course_groups(const PipelineConfig& config);

}  // namespace elab
