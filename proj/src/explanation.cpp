#include "elab/explanation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "elab/error.hpp"
#include "elab/random.hpp"

namespace elab {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::LIME: return "LIME";
    case Method::SHAP: return "SHAP";
    case Method::Confounder: return "Confounder";
    case Method::ExactShapley: return "ExactShapley";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::LIME, Method::SHAP, Method::Confounder, Method::ExactShapley})
    if (method_name(m) == name) return m;
  throw ValidationError(fmt::format("unknown explainer method '{}'", name));
}

NormalizedScores normalize_scores(std::span<const double> raw) {
  NormalizedScores out{std::vector<double>(raw.size(), 0.0), std::vector<int>(raw.size(), 0)};
  double max_abs = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v)) throw NumericError("normalize_scores: non-finite score");
    max_abs = std::max(max_abs, std::abs(v));
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.signs[i] = raw[i] > 0 ? 1 : (raw[i] < 0 ? -1 : 0);
    if (max_abs > 0) out.magnitudes[i] = std::abs(raw[i]) / max_abs;
  }
  return out;
}

Explanation make_explanation(Method method, int weeks, int features, std::vector<double> raw) {
  Explanation e;
  e.method = method;
  e.weeks = weeks;
  e.features = features;
  auto n = normalize_scores(raw);
  e.scores = std::move(raw);
  e.normalized = std::move(n.magnitudes);
  e.signs = std::move(n.signs);
  return e;
}

Background Background::from_rows(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw ShapeError("background: no rows");
  Background bg;
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  bg.mean.assign(mean.data(), mean.data() + mean.size());
  bg.std.resize(bg.mean.size());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double var = (rows.col(c).array() - mean(c)).square().mean();
    bg.std[static_cast<std::size_t>(c)] = std::sqrt(var);
  }
  return bg;
}

std::vector<double> FeatureAttribution::signed_normalized() const {
  std::vector<double> out(normalized.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = signs[i] * normalized[i];
  return out;
}

FeatureAttribution aggregate_weeks(const Explanation& explanation, int weeks, int features) {
  if (weeks < 1 || features < 1 || explanation.scores.size() != static_cast<std::size_t>(weeks * features))
    throw ShapeError(fmt::format("aggregate_weeks: {} scores do not fit {} weeks x {} features",
                                 explanation.scores.size(), weeks, features));
  FeatureAttribution a;
  a.student_id = explanation.student_id;
  a.course_id = explanation.course_id;
  a.method = explanation.method;
  a.scores.assign(static_cast<std::size_t>(features), 0.0);
  for (int w = 0; w < weeks; ++w)
    for (int f = 0; f < features; ++f)
      a.scores[static_cast<std::size_t>(f)] += explanation.scores[static_cast<std::size_t>(w * features + f)];
  for (auto& v : a.scores) v /= weeks;
  auto n = normalize_scores(a.scores);
  a.normalized = std::move(n.magnitudes);
  a.signs = std::move(n.signs);
  return a;
}

std::vector<std::size_t> sample_indices(std::span<const double> probabilities, const std::vector<bool>& labels,
                                        std::size_t n_per_class) {
  if (probabilities.size() != labels.size()) throw ShapeError("sample_students: length mismatch");
  std::vector<std::size_t> picked;
  for (bool cls : {false, true}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    if (members.empty()) throw ValidationError("sample_students: a class has no members");
    std::stable_sort(members.begin(), members.end(),
                     [&](std::size_t a, std::size_t b) { return probabilities[a] < probabilities[b]; });
    const std::size_t N = members.size();
    const std::size_t k = std::min(n_per_class, N);
    for (std::size_t i = 0; i < k; ++i) picked.push_back(members[k == 1 ? 0 : i * (N - 1) / (k - 1)]);
  }
  return picked;
}

std::vector<std::string> sample_students(std::span<const double> probabilities, const std::vector<bool>& labels,
                                         std::span<const std::string> ids, std::size_t n_per_class) {
  if (ids.size() != labels.size()) throw ShapeError("sample_students: ids/labels length mismatch");
  std::vector<std::string> out;
  for (std::size_t i : sample_indices(probabilities, labels, n_per_class)) out.push_back(ids[i]);
  return out;
}

std::uint64_t student_seed(std::uint64_t seed, std::string_view student_id) {
  return substream_seed(seed, student_id);
}

}  // namespace elab
