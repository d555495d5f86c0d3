#include "elab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "elab/checkpoint.hpp"
#include "elab/compare_io.hpp"
#include "elab/course_io.hpp"
#include "elab/digest.hpp"
#include "elab/error.hpp"
#include "elab/explanation_io.hpp"
#include "elab/feature_io.hpp"
#include "elab/presets.hpp"
#include "elab/random.hpp"
#include "elab/report.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace elab {

namespace {

void reject_unknown(const nlohmann::json& doc, std::initializer_list<std::string_view> keys, std::string_view where) {
  if (!doc.is_object()) throw ValidationError(fmt::format("config: '{}' must be an object", where));
  for (const auto& [k, v] : doc.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ValidationError(fmt::format("config: unknown key '{}' in {}", k, where));
}

template <typename T>
void read(const nlohmann::json& doc, const char* key, T& out) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(fmt::format("config: '{}' has the wrong type", key));
  }
}

SyntheticConfig synthetic_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"course_id", "n_students", "weeks", "n_videos_per_week", "n_quizzes_per_week", "pass_rate",
                  "engagement_decay_fail", "quiz_accuracy_pass", "quiz_accuracy_fail", "proactivity_shift_pass",
                  "seed", "seconds_per_week", "metadata"},
                 "synthetic");
  SyntheticConfig c;
  read(j, "course_id", c.course_id);
  read(j, "n_students", c.n_students);
  read(j, "weeks", c.weeks);
  read(j, "n_videos_per_week", c.n_videos_per_week);
  read(j, "n_quizzes_per_week", c.n_quizzes_per_week);
  read(j, "pass_rate", c.pass_rate);
  read(j, "engagement_decay_fail", c.engagement_decay_fail);
  read(j, "quiz_accuracy_pass", c.quiz_accuracy_pass);
  read(j, "quiz_accuracy_fail", c.quiz_accuracy_fail);
  read(j, "proactivity_shift_pass", c.proactivity_shift_pass);
  read(j, "seed", c.seed);
  read(j, "seconds_per_week", c.seconds_per_week);
  if (j.contains("metadata") && !j["metadata"].is_null()) c.metadata = metadata_from_json(j["metadata"]);
  return c;
}

ojson synthetic_to_json(const SyntheticConfig& c) {
  ojson j;
  j["course_id"] = c.course_id;
  j["n_students"] = c.n_students;
  j["weeks"] = c.weeks;
  j["n_videos_per_week"] = c.n_videos_per_week;
  j["n_quizzes_per_week"] = c.n_quizzes_per_week;
  j["pass_rate"] = c.pass_rate;
  j["engagement_decay_fail"] = c.engagement_decay_fail;
  j["quiz_accuracy_pass"] = c.quiz_accuracy_pass;
  j["quiz_accuracy_fail"] = c.quiz_accuracy_fail;
  j["proactivity_shift_pass"] = c.proactivity_shift_pass;
  j["seed"] = c.seed;
  j["seconds_per_week"] = c.seconds_per_week;
  if (c.metadata) j["metadata"] = metadata_to_json(*c.metadata);
  return j;
}

ojson lime_to_json(const LimeConfig& c) {
  ojson j;
  j["n_features"] = c.n_features;
  j["n_samples"] = c.n_samples;
  j["kernel_width"] = c.kernel_width ? ojson(*c.kernel_width) : ojson(nullptr);
  j["ridge"] = c.ridge;
  return j;
}

ojson shap_to_json(const KernelShapConfig& c) {
  ojson j;
  j["n_coalitions"] = c.n_coalitions;
  return j;
}

ojson confounder_to_json(const ConfounderConfig& c) {
  ojson j;
  j["step"] = c.step;
  j["max_iters"] = c.max_iters;
  j["threshold"] = c.threshold;
  return j;
}

ojson method_config(Method m, const ExplainSettings& s) {
  switch (m) {
    case Method::LIME: return lime_to_json(s.lime);
    case Method::SHAP: return shap_to_json(s.shap);
    case Method::Confounder: return confounder_to_json(s.confounder);
    case Method::ExactShapley: return ojson::object();
  }
  return ojson::object();
}

std::string rel(const PipelineConfig& config, const fs::path& p) {
  return fs::relative(p, config.out).generic_string();
}

// Manifest bookkeeping: one entry per stage with input and output digests.
class StageRecord {
 public:
  StageRecord(const PipelineConfig& config, Stage stage)
      : config_(config), stage_(stage), start_(std::chrono::steady_clock::now()) {}

  void input(const fs::path& p) { inputs_[rel(config_, p)] = sha256_file(p); }
  void output(const fs::path& p) { outputs_[rel(config_, p)] = sha256_file(p); }

  void commit() {
    const fs::path manifest_path = config_.out / "manifest.json";
    const std::string hash = config_hash(config_);
    nlohmann::json old;
    if (fs::exists(manifest_path)) {
      old = load_json(manifest_path);
      if (old.value("config_hash", "") != hash) old = nlohmann::json::object();
    }
    ojson doc;
    doc["tool_version"] = kToolVersion;
    doc["config_hash"] = hash;
    ojson stages = ojson::object();
    for (int s = 0; s <= static_cast<int>(Stage::Report); ++s) {
      const auto name = std::string(stage_name(static_cast<Stage>(s)));
      if (static_cast<Stage>(s) == stage_) {
        ojson entry;
        entry["inputs"] = to_json(inputs_);
        entry["outputs"] = to_json(outputs_);
        stages[name] = std::move(entry);
      } else if (old.contains("stages") && old["stages"].contains(name)) {
        stages[name] = ojson::parse(old["stages"][name].dump());
      }
    }
    doc["stages"] = std::move(stages);
    save_json(manifest_path, doc);

    // Wall-clock lives beside the manifest so the manifest stays reproducible.
    const fs::path timings_path = config_.out / "timings.json";
    ojson timings = ojson::object();
    if (fs::exists(timings_path)) timings = ojson::parse(read_text(timings_path));
    timings[std::string(stage_name(stage_))] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    save_json(timings_path, timings);
  }

 private:
  static ojson to_json(const std::map<std::string, std::string>& m) {
    ojson j = ojson::object();
    for (const auto& [k, v] : m) j[k] = v;
    return j;
  }

  const PipelineConfig& config_;
  Stage stage_;
  std::chrono::steady_clock::time_point start_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

fs::path explanations_stem(const PipelineConfig& config, std::string_view course_id, Method m) {
  return course_dir(config, course_id) / "explanations" / std::string(method_name(m));
}

fs::path with_ext(fs::path p, const char* ext) {
  p += ext;
  return p;
}

std::vector<std::string> read_split_ids(const nlohmann::json& doc, const char* key) {
  return doc.at(key).get<std::vector<std::string>>();
}

std::uint64_t stage_seed(const PipelineConfig& config, std::string_view stage, std::string_view course_id) {
  return substream_seed(config.seed, fmt::format("{}/{}", stage, course_id));
}

}  // namespace

void PipelineConfig::validate() const {
  if (courses.empty()) throw ValidationError("config: no courses (set 'courses' or 'preset')");
  std::set<std::string> ids;
  for (const auto& c : courses) {
    if (c.course_id.empty()) throw ValidationError("config: course without an id");
    if (c.course_id.find_first_of("/\\,") != std::string::npos || c.course_id == "." || c.course_id == "..")
      throw ValidationError(fmt::format("config: course id '{}' is not a valid directory name", c.course_id));
    if (!ids.insert(c.course_id).second) throw ValidationError(fmt::format("config: duplicate course '{}'", c.course_id));
    if (c.synthetic.has_value() == c.path.has_value())
      throw ValidationError(fmt::format("config: course '{}' needs exactly one of 'synthetic' or 'path'", c.course_id));
    if (c.synthetic) c.synthetic->validate();
  }
  if (workers < 0) throw ValidationError("config: workers must be non-negative");
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0))
    throw ValidationError("config: split.train_fraction must lie in (0, 1)");
  train.validate();
  if (explain.methods.empty()) throw ValidationError("config: explain.methods is empty");
  if (explain.n_per_class < 1) throw ValidationError("config: explain.n_per_class must be positive");
  explain.lime.validate();
  if (explain.shap.n_coalitions < 4) throw ValidationError("config: explain.shap.n_coalitions is too small");
  if (!(explain.confounder.step > 0.0) || explain.confounder.max_iters < 1)
    throw ValidationError("config: explain.confounder needs a positive step and max_iters");
  if (compare.k < 1 || compare.k > kFeatureCount) throw ValidationError("config: compare.k out of range");
  if (compare.metrics.empty()) throw ValidationError("config: compare.metrics is empty");
}

PipelineConfig config_from_json(const nlohmann::json& doc, const fs::path& base_dir) {
  reject_unknown(doc, {"seed", "out", "workers", "preset", "courses", "extract", "split", "train", "explain", "compare"},
                 "config");
  PipelineConfig c;
  read(doc, "seed", c.seed);
  if (doc.contains("out")) c.out = base_dir / doc["out"].get<std::string>();
  read(doc, "workers", c.workers);
  if (doc.contains("preset") && !doc["preset"].is_null()) apply_preset(c, doc["preset"].get<std::string>());
  if (doc.contains("courses")) {
    c.courses.clear();
    for (const auto& j : doc["courses"]) {
      reject_unknown(j, {"id", "synthetic", "path", "catalogue"}, "courses[]");
      CourseInput in;
      if (j.contains("catalogue")) {
        in.synthetic = synthetic_from_profile(course_profile(j["catalogue"].get<std::string>()));
      }
      if (j.contains("synthetic")) in.synthetic = synthetic_from_json(j["synthetic"]);
      if (j.contains("path")) in.path = base_dir / j["path"].get<std::string>();
      if (j.contains("id")) in.course_id = j["id"].get<std::string>();
      else if (in.synthetic) in.course_id = in.synthetic->course_id;
      else if (in.path) in.course_id = in.path->filename().string();
      if (in.synthetic) in.synthetic->course_id = in.course_id;
      c.courses.push_back(std::move(in));
    }
  }
  if (doc.contains("extract")) {
    const auto& j = doc["extract"];
    reject_unknown(j, {"gap_threshold", "full_watch_fraction"}, "extract");
    read(j, "gap_threshold", c.extract.gap_threshold);
    read(j, "full_watch_fraction", c.extract.full_watch_fraction);
  }
  if (doc.contains("split")) {
    reject_unknown(doc["split"], {"train_fraction"}, "split");
    read(doc["split"], "train_fraction", c.split.train_fraction);
  }
  if (doc.contains("train")) {
    const auto& j = doc["train"];
    reject_unknown(j,
                   {"model", "hidden", "learning_rate", "max_epochs", "patience", "batch_size", "l2",
                    "validation_fraction", "threshold"},
                   "train");
    if (j.contains("model")) c.train.kind = parse_model_kind(j["model"].get<std::string>());
    read(j, "hidden", c.train.hidden);
    read(j, "learning_rate", c.train.learning_rate);
    read(j, "max_epochs", c.train.max_epochs);
    read(j, "patience", c.train.patience);
    read(j, "batch_size", c.train.batch_size);
    read(j, "l2", c.train.l2);
    read(j, "validation_fraction", c.train.validation_fraction);
    read(j, "threshold", c.train.threshold);
  }
  if (doc.contains("explain")) {
    const auto& j = doc["explain"];
    reject_unknown(j, {"methods", "n_per_class", "lime", "shap", "confounder"}, "explain");
    if (j.contains("methods")) {
      c.explain.methods.clear();
      for (const auto& m : j["methods"]) c.explain.methods.push_back(parse_method(m.get<std::string>()));
    }
    read(j, "n_per_class", c.explain.n_per_class);
    if (j.contains("lime")) {
      const auto& l = j["lime"];
      reject_unknown(l, {"n_features", "n_samples", "kernel_width", "ridge"}, "explain.lime");
      read(l, "n_features", c.explain.lime.n_features);
      read(l, "n_samples", c.explain.lime.n_samples);
      if (l.contains("kernel_width") && !l["kernel_width"].is_null())
        c.explain.lime.kernel_width = l["kernel_width"].get<double>();
      read(l, "ridge", c.explain.lime.ridge);
    }
    if (j.contains("shap")) {
      reject_unknown(j["shap"], {"n_coalitions"}, "explain.shap");
      read(j["shap"], "n_coalitions", c.explain.shap.n_coalitions);
    }
    if (j.contains("confounder")) {
      reject_unknown(j["confounder"], {"step", "max_iters"}, "explain.confounder");
      read(j["confounder"], "step", c.explain.confounder.step);
      read(j["confounder"], "max_iters", c.explain.confounder.max_iters);
    }
  }
  if (doc.contains("compare")) {
    const auto& j = doc["compare"];
    reject_unknown(j, {"metrics", "k"}, "compare");
    if (j.contains("metrics")) {
      c.compare.metrics.clear();
      for (const auto& m : j["metrics"]) c.compare.metrics.push_back(parse_metric(m.get<std::string>()));
    }
    read(j, "k", c.compare.k);
  }
  return c;
}

void apply_preset(PipelineConfig& config, std::string_view name) {
  const auto preset = make_preset(name);
  config.preset = preset.name;
  config.courses.clear();
  for (const auto& s : preset.courses) config.courses.push_back({s.course_id, s, std::nullopt});
}

ojson config_to_json(const PipelineConfig& c) {
  ojson j;
  j["seed"] = c.seed;
  j["preset"] = c.preset ? ojson(*c.preset) : ojson(nullptr);
  auto courses = ojson::array();
  for (const auto& in : c.courses) {
    ojson cj;
    cj["id"] = in.course_id;
    if (in.synthetic) cj["synthetic"] = synthetic_to_json(*in.synthetic);
    if (in.path) cj["path"] = in.path->generic_string();
    courses.push_back(std::move(cj));
  }
  j["courses"] = std::move(courses);
  j["extract"] = {{"gap_threshold", c.extract.gap_threshold}, {"full_watch_fraction", c.extract.full_watch_fraction}};
  j["split"] = {{"train_fraction", c.split.train_fraction}};
  ojson t;
  t["model"] = model_kind_name(c.train.kind);
  t["hidden"] = c.train.hidden;
  t["learning_rate"] = c.train.learning_rate;
  t["max_epochs"] = c.train.max_epochs;
  t["patience"] = c.train.patience;
  t["batch_size"] = c.train.batch_size;
  t["l2"] = c.train.l2;
  t["validation_fraction"] = c.train.validation_fraction;
  t["threshold"] = c.train.threshold;
  j["train"] = std::move(t);
  ojson e;
  auto methods = ojson::array();
  for (auto m : c.explain.methods) methods.push_back(method_name(m));
  e["methods"] = std::move(methods);
  e["n_per_class"] = c.explain.n_per_class;
  e["lime"] = lime_to_json(c.explain.lime);
  e["shap"] = shap_to_json(c.explain.shap);
  e["confounder"] = {{"step", c.explain.confounder.step}, {"max_iters", c.explain.confounder.max_iters}};
  j["explain"] = std::move(e);
  auto metrics = ojson::array();
  for (auto m : c.compare.metrics) metrics.push_back(metric_name(m));
  j["compare"] = {{"metrics", std::move(metrics)}, {"k", c.compare.k}};
  return j;
}

std::string config_hash(const PipelineConfig& config) { return sha256_hex(config_to_json(config).dump()); }

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Generate: return "generate";
    case Stage::Extract: return "extract";
    case Stage::Train: return "train";
    case Stage::Explain: return "explain";
    case Stage::Compare: return "compare";
    case Stage::Report: return "report";
  }
  return "unknown";
}

fs::path course_dir(const PipelineConfig& config, std::string_view course_id) {
  return config.out / "courses" / std::string(course_id);
}

std::vector<std::string> course_ids(const PipelineConfig& config) {
  std::vector<std::string> ids;
  for (const auto& c : config.courses) ids.push_back(c.course_id);
  return ids;
}

std::vector<std::vector<std::string>> course_groups(const PipelineConfig& config) {
  std::vector<std::vector<std::string>> groups;
  const auto ids = course_ids(config);
  for (std::size_t i = 0; i < ids.size(); i += 2) {
    std::vector<std::string> g{ids[i]};
    if (i + 1 < ids.size()) g.push_back(ids[i + 1]);
    groups.push_back(std::move(g));
  }
  return groups;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::size_t threads = workers > 0 ? static_cast<std::size_t>(workers) : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Explanation explain_instance(Method method, const Predictor& predictor, std::span<const double> instance,
                             const Background& background, const ExplainSettings& settings, std::uint64_t seed,
                             double threshold) {
  switch (method) {
    case Method::LIME: {
      auto cfg = settings.lime;
      cfg.seed = seed;
      return lime_explain(predictor, instance, background, cfg);
    }
    case Method::SHAP: {
      auto cfg = settings.shap;
      cfg.seed = seed;
      return kernel_shap(predictor, instance, background, cfg);
    }
    case Method::Confounder: {
      auto cfg = settings.confounder;
      cfg.threshold = threshold;
      return counterfactual_confounder(predictor, instance, background, cfg).explanation;
    }
    case Method::ExactShapley: return exact_shapley(predictor, instance, background);
  }
  throw ValidationError("unknown method");
}

void run_generate(const PipelineConfig& config) {
  config.validate();
  StageRecord record(config, Stage::Generate);
  const fs::path config_path = config.out / "config.json";
  save_json(config_path, config_to_json(config));
  record.output(config_path);
  for (const auto& in : config.courses) {
    const fs::path dir = course_dir(config, in.course_id);
    CourseSchedule schedule;
    std::vector<Interaction> events;
    std::vector<StudentLabel> labels;
    if (in.synthetic) {
      auto s = *in.synthetic;
      s.seed = substream_seed(config.seed ^ s.seed, "generate/" + in.course_id);
      auto course = generate_synthetic_course(s);
      schedule = std::move(course.schedule);
      events = std::move(course.events);
      labels = std::move(course.labels);
    } else {
      schedule = load_schedule(*in.path / "schedule.json");
      events = load_events(*in.path / "events.jsonl", schedule);
      labels = load_labels(*in.path / "labels.csv");
    }
    schedule.course_id = in.course_id;
    save_schedule(dir / "schedule.json", schedule);
    save_events(dir / "events.jsonl", events);
    save_labels(dir / "labels.csv", labels);
    for (const char* f : {"schedule.json", "events.jsonl", "labels.csv"}) record.output(dir / f);
  }
  record.commit();
}

void run_extract(const PipelineConfig& config) {
  config.validate();
  StageRecord record(config, Stage::Extract);
  for (const auto& id : course_ids(config)) {
    const fs::path dir = course_dir(config, id);
    const auto schedule = load_schedule(dir / "schedule.json");
    const auto events = load_events(dir / "events.jsonl", schedule);
    const auto labels = load_labels(dir / "labels.csv");
    for (const char* f : {"schedule.json", "events.jsonl", "labels.csv"}) record.input(dir / f);
    const auto matrix = impute_nan(extract_features(events, schedule, labels, config.extract));
    save_feature_matrix(dir / "features.csv", matrix);
    record.output(dir / "features.csv");
    record.output(dir / "features.json");
  }
  record.commit();
}

void run_train(const PipelineConfig& config) {
  config.validate();
  StageRecord record(config, Stage::Train);
  for (const auto& id : course_ids(config)) {
    const fs::path dir = course_dir(config, id);
    const auto matrix = load_feature_matrix(dir / "features.csv");
    const auto labels = load_labels(dir / "labels.csv");
    for (const char* f : {"features.csv", "features.json", "labels.csv"}) record.input(dir / f);

    SplitSpec spec = config.split;
    spec.seed = stage_seed(config, "split", id);
    const auto split = stratified_split(labels, spec);

    std::vector<std::size_t> train_idx;
    for (const auto& s : split.train) {
      auto i = matrix.student_index(s);
      if (!i) throw ValidationError(fmt::format("{}: labeled student '{}' has no features", id, s));
      train_idx.push_back(*i);
    }
    const auto stats = fit_normalization(matrix, train_idx);
    const auto normalized = normalize_features(matrix, stats);

    TrainConfig tc = config.train;
    tc.seed = stage_seed(config, "train", id);
    TrainReport report;
    const auto model = train(normalized, labels, split.train, tc, &report);

    const Eigen::VectorXd p = model->predict(design_rows(normalized, split.test));
    const Eigen::VectorXd y = target_vector(labels, split.test);
    std::vector<bool> truth(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) truth[static_cast<std::size_t>(i)] = y(i) > 0.5;
    const double bac = balanced_accuracy(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), truth,
                                         tc.threshold);

    ojson split_doc;
    split_doc["train"] = split.train;
    split_doc["test"] = split.test;
    save_json(dir / "split.json", split_doc);
    save_json(dir / "normalization.json", stats_to_json(stats));
    save_predictor(dir / "model.json", *model);
    ojson metrics;
    metrics["bac"] = bac;
    metrics["threshold"] = tc.threshold;
    metrics["n_train"] = split.train.size();
    metrics["n_test"] = split.test.size();
    metrics["seed"] = tc.seed;
    metrics["epochs_run"] = report.epochs_run;
    metrics["best_epoch"] = report.best_epoch;
    save_json(dir / "metrics.json", metrics);
    for (const char* f : {"split.json", "normalization.json", "model.json", "metrics.json"}) record.output(dir / f);
  }
  record.commit();
}

void run_explain(const PipelineConfig& config) {
  config.validate();
  StageRecord record(config, Stage::Explain);
  for (const auto& id : course_ids(config)) {
    const fs::path dir = course_dir(config, id);
    const auto matrix = load_feature_matrix(dir / "features.csv");
    const auto labels = load_labels(dir / "labels.csv");
    const auto stats = stats_from_json(load_json(dir / "normalization.json"));
    const auto split_doc = load_json(dir / "split.json");
    const auto model = load_predictor(dir / "model.json");
    for (const char* f : {"features.csv", "features.json", "labels.csv", "normalization.json", "split.json", "model.json"})
      record.input(dir / f);

    const auto normalized = normalize_features(matrix, stats);
    const auto train_ids = read_split_ids(split_doc, "train");
    const Background background = Background::from_rows(design_rows(normalized, train_ids));

    // Representative students are drawn from the whole cohort.
    const Eigen::MatrixXd all = design_rows(normalized);
    const Eigen::VectorXd probs = model->predict(all);
    std::map<std::string, bool> passed;
    for (const auto& l : labels) passed[l.student_id] = l.passed;
    std::vector<bool> truth;
    for (const auto& s : normalized.students) truth.push_back(passed.at(s));
    const std::vector<double> p(probs.data(), probs.data() + probs.size());
    const auto picked = sample_indices(p, truth, config.explain.n_per_class);

    ojson sample = ojson::array();
    for (auto i : picked) {
      ojson s;
      s["student_id"] = normalized.students[i];
      s["passed"] = static_cast<bool>(truth[i]);
      s["probability"] = p[i];
      sample.push_back(std::move(s));
    }
    save_json(dir / "sample.json", ojson{{"students", std::move(sample)}});
    record.output(dir / "sample.json");

    for (Method method : config.explain.methods) {
      const std::uint64_t method_seed = stage_seed(config, fmt::format("explain/{}", method_name(method)), id);
      std::vector<Explanation> out(picked.size());
      parallel_for(picked.size(), config.workers, [&](std::size_t k) {
        const std::size_t s = picked[k];
        const auto& sid = normalized.students[s];
        auto e = explain_instance(method, *model, normalized.row(s), background, config.explain,
                                  student_seed(method_seed, sid), config.train.threshold);
        e.student_id = sid;
        e.course_id = id;
        out[k] = std::move(e);
      });
      const auto stem = explanations_stem(config, id, method);
      save_explanations(stem, out, normalized.features, method, method_seed, method_config(method, config.explain));
      record.output(with_ext(stem, ".csv"));
      record.output(with_ext(stem, ".json"));
    }
  }
  record.commit();
}

void run_compare(const PipelineConfig& config) {
  config.validate();
  StageRecord record(config, Stage::Compare);
  const auto features = feature_names();
  std::vector<AggregatedRanking> rankings;
  for (Method method : config.explain.methods) {
    for (const auto& id : course_ids(config)) {
      const fs::path dir = course_dir(config, id);
      const auto schedule = load_schedule(dir / "schedule.json");
      record.input(dir / "schedule.json");
      const auto stem = explanations_stem(config, id, method);
      const auto expl = load_explanations(stem, features, schedule.weeks, id);
      record.input(with_ext(stem, ".csv"));
      record.input(with_ext(stem, ".json"));
      rankings.push_back(aggregate_students(expl, features));
    }
  }
  const auto ordered = order_by_method(rankings);
  const fs::path cdir = config.out / "compare";
  save_rankings(cdir / "rankings.json", ordered);
  record.output(cdir / "rankings.json");

  if (ordered.size() >= 2) {
    for (Metric m : config.compare.metrics) {
      const auto matrix = cross_matrix(ordered, m, config.compare.k);
      const fs::path p = cdir / fmt::format("{}.csv", metric_name(m));
      {
        auto out = open_output(p);
        write_matrix_csv(out, matrix);
      }
      record.output(p);
    }
  }

  ojson insights = ojson::array();
  for (const auto& group : course_groups(config)) {
    if (group.size() < 2) continue;
    for (Method method : config.explain.methods) {
      const AggregatedRanking* a = nullptr;
      const AggregatedRanking* b = nullptr;
      for (const auto& r : ordered) {
        if (r.method != method) continue;
        if (r.course_id == group[0]) a = &r;
        if (r.course_id == group[1]) b = &r;
      }
      if (a && b) insights.push_back(insight_to_json(pair_insights(*a, *b)));
    }
  }
  save_json(cdir / "insights.json", ojson{{"insights", std::move(insights)}});
  record.output(cdir / "insights.json");
  record.commit();
}

void run_report(const PipelineConfig& config) {
  config.validate();
  StageRecord record(config, Stage::Report);
  const fs::path cdir = config.out / "compare";
  const fs::path rdir = config.out / "report";
  const auto rankings = load_rankings(cdir / "rankings.json");
  record.input(cdir / "rankings.json");
  if (rankings.empty()) throw ValidationError("report: no explanations to report");

  std::vector<ComparisonMatrix> matrices;
  for (Metric m : config.compare.metrics) {
    const fs::path p = cdir / fmt::format("{}.csv", metric_name(m));
    if (!fs::exists(p)) continue;
    auto in = open_input(p);
    matrices.push_back(read_matrix_csv(in, m));
    record.input(p);
  }
  const auto insights_doc = load_json(cdir / "insights.json");
  record.input(cdir / "insights.json");

  std::vector<std::string> warnings;
  for (const auto& group : course_groups(config)) {
    std::vector<AggregatedRanking> panels;
    for (const auto& r : rankings)
      if (std::find(group.begin(), group.end(), r.course_id) != group.end()) panels.push_back(r);
    const auto rows = heatmap_rows(panels);
    const auto svg = heatmap_svg(panels, rows);
    const std::string name = group.size() == 2 ? fmt::format("heatmap_{}_vs_{}.svg", group[0], group[1])
                                               : fmt::format("heatmap_{}.svg", group[0]);
    if (svg.all_blank) warnings.push_back(fmt::format("{}: every cell is below the display threshold", name));
    {
      auto out = open_output(rdir / name);
      out << svg.svg;
    }
    record.output(rdir / name);
  }
  for (const auto& m : matrices) {
    const fs::path p = rdir / fmt::format("matrix_{}.svg", metric_name(m.metric));
    {
      auto out = open_output(p);
      out << matrix_svg(m);
    }
    record.output(p);
    const fs::path csv = rdir / fmt::format("matrix_{}.csv", metric_name(m.metric));
    {
      auto out = open_output(csv);
      write_matrix_csv(out, m);
    }
    record.output(csv);
  }

  std::vector<std::pair<std::string, double>> bac;
  for (const auto& id : course_ids(config)) {
    const fs::path p = course_dir(config, id) / "metrics.json";
    bac.emplace_back(id, load_json(p).at("bac").get<double>());
    record.input(p);
  }
  {
    auto out = open_output(rdir / "insights.json");
    out << insights_doc.dump(2) << '\n';
  }
  record.output(rdir / "insights.json");
  {
    auto out = open_output(rdir / "summary.txt");
    out << summary_text(bac, rankings, matrices, insights_doc, warnings);
  }
  record.output(rdir / "summary.txt");
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  record.commit();
}

void run_stage(const PipelineConfig& config, Stage stage) {
  switch (stage) {
    case Stage::Generate: return run_generate(config);
    case Stage::Extract: return run_extract(config);
    case Stage::Train: return run_train(config);
    case Stage::Explain: return run_explain(config);
    case Stage::Compare: return run_compare(config);
    case Stage::Report: return run_report(config);
  }
}

void run_pipeline(const PipelineConfig& config) {
  for (int s = 0; s <= static_cast<int>(Stage::Report); ++s) run_stage(config, static_cast<Stage>(s));
}

}  // namespace elab
