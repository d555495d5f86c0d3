#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace elab {

enum class Method { LIME, SHAP, Confounder, ExactShapley };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

/// Signed attribution per (week, feature) dimension, flattened week-major.
struct Explanation {
  std::string student_id;
  std::string course_id;
  Method method = Method::LIME;
  int weeks = 0;
  int features = 0;
  std::vector<double> scores;      // raw signed attributions
  std::vector<double> normalized;  // |raw| / max|raw|
  std::vector<int> signs;          // -1, 0, +1
  std::optional<double> base_value;
  std::map<std::string, std::string> notes;  // explainer diagnostics

  std::size_t dims() const { return scores.size(); }
};

struct NormalizedScores {
  std::vector<double> magnitudes;
  std::vector<int> signs;
};

/// Max-abs scaling; an all-zero vector stays all zero. Throws NumericError
/// on non-finite input.
NormalizedScores normalize_scores(std::span<const double> raw);

/// Builds an explanation from raw scores, filling normalized and signs.
Explanation make_explanation(Method method, int weeks, int features, std::vector<double> raw);

/// Reference point for feature removal and perturbation scale.
struct Background {
  std::vector<double> mean;
  std::vector<double> std;  // population standard deviation

  std::size_t dims() const { return mean.size(); }
  static Background from_rows(const Eigen::MatrixXd& rows);
};

/// Week-aggregated attribution of one student (length F).
struct FeatureAttribution {
  std::string student_id;
  std::string course_id;
  Method method = Method::LIME;
  std::vector<double> scores;  // mean over weeks of signed raw scores
  std::vector<double> normalized;
  std::vector<int> signs;

  /// sign * normalized, the per-student contribution used for rankings.
  std::vector<double> signed_normalized() const;
};

/// Per feature, the mean over weeks of the signed raw scores. Throws
/// ShapeError when the explanation is not W*F long.
FeatureAttribution aggregate_weeks(const Explanation& explanation, int weeks, int features);

/// Indices (into `probabilities`) of the representative students: per class
/// (failing first), members sorted by probability ascending and picked at
/// floor(i*(N-1)/(k-1)) for i < k = min(n_per_class, N).
std::vector<std::size_t> sample_indices(std::span<const double> probabilities, const std::vector<bool>& labels,
                                        std::size_t n_per_class = 50);
std::vector<std::string> sample_students(std::span<const double> probabilities, const std::vector<bool>& labels,
                                         std::span<const std::string> ids, std::size_t n_per_class = 50);

/// Seed of a student's explainer substream.
std::uint64_t student_seed(std::uint64_t seed, std::string_view student_id);

}  // namespace elab
