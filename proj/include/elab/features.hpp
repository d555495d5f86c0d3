#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elab/clickstream.hpp"

namespace elab {

enum class Dimension { Effort, Regularity, Proactivity, Control };

std::string_view dimension_name(Dimension d);

struct FeatureSpec {
  std::string_view name;
  Dimension dimension;
  std::string_view definition;
  bool nan_possible;
};

inline constexpr std::size_t kFeatureCount = 22;

/// The registered behavioral features, in canonical column order.
std::span<const FeatureSpec> feature_specs();
std::vector<std::string> feature_names();
std::optional<std::size_t> feature_index(std::string_view name);

/// Students x weeks x features tensor, stored student-major then week then
/// feature, so one student's W*F block is contiguous.
struct FeatureMatrix {
  std::vector<std::string> students;
  int weeks = 0;
  std::vector<std::string> features;
  std::vector<double> values;
  std::vector<std::uint8_t> nan_mask;   // 1 where the cell was imputed
  std::vector<double> per_feature_min;  // imputation value per feature

  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> students, int weeks, std::vector<std::string> features);

  std::size_t n_students() const { return students.size(); }
  std::size_t n_features() const { return features.size(); }
  /// Flattened per-student dimension count (weeks * features).
  std::size_t width() const { return static_cast<std::size_t>(weeks) * features.size(); }

  std::size_t index(std::size_t s, std::size_t w, std::size_t f) const {
    return (s * static_cast<std::size_t>(weeks) + w) * features.size() + f;
  }
  double at(std::size_t s, std::size_t w, std::size_t f) const { return values[index(s, w, f)]; }
  double& at(std::size_t s, std::size_t w, std::size_t f) { return values[index(s, w, f)]; }
  bool imputed(std::size_t s, std::size_t w, std::size_t f) const { return nan_mask[index(s, w, f)] != 0; }

  std::span<const double> row(std::size_t s) const { return {values.data() + s * width(), width()}; }
  std::optional<std::size_t> student_index(std::string_view id) const;

  bool operator==(const FeatureMatrix&) const = default;
};

struct ExtractOptions {
  std::int64_t gap_threshold = kDefaultSessionGap;
  double full_watch_fraction = 0.9;
};

/// Computes every feature for every labeled student and week. Undefined
/// ratios and statistics are NaN; count features of idle weeks are 0.
/// Throws ValidationError when validate_course reports findings.
FeatureMatrix extract_features(std::span<const Interaction> events, const CourseSchedule& schedule,
                               std::span<const StudentLabel> labels, const ExtractOptions& options = {});

/// Per-student extraction: W rows of kFeatureCount values.
std::vector<double> extract_student_features(std::span<const Interaction> events,
                                             const CourseSchedule& schedule,
                                             const ExtractOptions& options = {});

/// Replaces NaN cells with the feature's minimum over all defined cells of
/// the course (0 if none), recording replacements in nan_mask.
FeatureMatrix impute_nan(const FeatureMatrix& raw);

struct NormalizationStats {
  std::vector<std::string> features;
  std::vector<double> min;
  std::vector<double> max;
};

/// Min/max per feature over the given students (all weeks).
NormalizationStats fit_normalization(const FeatureMatrix& matrix, std::span<const std::size_t> students);

/// Min-max scaling into [0, 1]; constant features map to 0, values outside
/// the fitted range are clipped. Throws ShapeError when a feature has no stats.
FeatureMatrix normalize_features(const FeatureMatrix& matrix, const NormalizationStats& stats);

}  // namespace elab
