#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elab/synthetic.hpp"

namespace elab {

/// One row of the course catalogue the presets are built from.
struct CourseProfile {
  std::string course_id;
  int weeks = 0;
  CourseMetadata metadata;
};

std::span<const CourseProfile> course_catalogue();
const CourseProfile& course_profile(std::string_view course_id);

/// Synthetic stand-in for a catalogue course. The metadata is copied verbatim;
/// the schedule uses three videos per week and round(3 * quiz_video_ratio)
/// quizzes (clamped to [1, 30]); the pass rate is the success rate clamped to
/// [0.25, 0.75] so both classes can fill a 50-student sample.
SyntheticConfig synthetic_from_profile(const CourseProfile& profile, int n_students = 200);

struct Preset {
  std::string name;
  std::string description;
  std::vector<SyntheticConfig> courses;
};

/// Names: setting-fp, setting-la, active-learning, optimality, language
/// (course pairs), separable (one course with far-apart archetypes) and
/// demo (a small pair for quick runs).
std::vector<std::string> preset_names();
/// Throws ValidationError for unknown names.
Preset make_preset(std::string_view name);

}  // namespace elab
