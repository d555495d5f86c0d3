#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "elab/clickstream.hpp"

namespace elab {

/// Knobs of the synthetic course generator. Passing and failing students
/// follow two behavioral archetypes that differ only in engagement decay,
/// quiz accuracy and how far ahead of the schedule they work.
struct SyntheticConfig {
  std::string course_id = "synthetic";
  int n_students = 100;
  int weeks = 4;
  int n_videos_per_week = 3;
  int n_quizzes_per_week = 2;
  double pass_rate = 0.5;
  double engagement_decay_fail = 0.8;  // per-week multiplicative activity decay, (0, 1]
  double quiz_accuracy_pass = 0.8;
  double quiz_accuracy_fail = 0.4;
  int proactivity_shift_pass = 1;  // weeks
  std::uint64_t seed = 42;
  std::int64_t seconds_per_week = 604800;
  std::optional<CourseMetadata> metadata;

  /// Throws ValidationError naming the first violated range.
  void validate() const;
};

struct SyntheticCourse {
  CourseSchedule schedule;
  std::vector<Interaction> events;  // sorted by (student_id, timestamp)
  std::vector<StudentLabel> labels;
};

/// Probability that a student visits an object scheduled for a given week
/// before the failing-archetype decay is applied.
inline constexpr double kBaseVisitProbability = 0.9;

SyntheticCourse generate_synthetic_course(const SyntheticConfig& config);

}  // namespace elab
