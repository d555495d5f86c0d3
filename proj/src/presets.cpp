#include "elab/presets.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "elab/error.hpp"
#include "elab/random.hpp"

namespace elab {

namespace {

CourseProfile profile(const char* id, const char* title, CourseSetting setting, const char* field, const char* level,
                      const char* language, int weeks, double ratio, int students, double success) {
  return {id, weeks, CourseMetadata{setting, title, field, language, level, ratio, success, students}};
}

const std::vector<CourseProfile>& catalogue() {
  using enum CourseSetting;
  static const std::vector<CourseProfile> rows{
      profile("mooc-la", "Algebra (part 2)", MOOC, "Math", "Prop", "French", 4, 2.13, 170, 0.67),
      profile("flip-la", "Algebre lineaire", Flipped, "Math", "BSc", "French", 10, 1.76, 214, 0.59),
      profile("mooc-fp", "Functional Programming Principles in Scala", MOOC, "CS", "BSc", "English", 6, 0.52, 3565,
              0.48),
      profile("flip-fp", "Functional programming", Flipped, "CS", "MSc", "English", 10, 0.21, 218, 0.62),
      profile("va1", "African Cities - An introduction to urban planning", MOOC, "SS", "BSc", "English", 12, 5.42,
              5643, 0.10),
      profile("va2", "African Cities - An introduction to urban planning", MOOC, "SS", "Prop", "French", 12, 5.42,
              4699, 0.05),
      profile("an1", "Analyse Numérique pour Ingénieurs", MOOC, "Math", "BSc", "French", 9, 9.14, 506, 0.08),
      profile("an2", "Analyse Numérique pour Ingénieurs", MOOC, "Math", "BSc", "French", 9, 9.14, 506, 0.71),
      profile("geo", "Éléments de Géomatique", MOOC, "Eng.", "BSc", "French", 11, 3.89, 452, 0.45),
  };
  return rows;
}

}  // namespace

std::span<const CourseProfile> course_catalogue() { return catalogue(); }

const CourseProfile& course_profile(std::string_view course_id) {
  for (const auto& p : catalogue())
    if (p.course_id == course_id) return p;
  throw ValidationError(fmt::format("unknown catalogue course '{}'", course_id));
}

SyntheticConfig synthetic_from_profile(const CourseProfile& profile, int n_students) {
  SyntheticConfig c;
  c.course_id = profile.course_id;
  c.n_students = n_students;
  c.weeks = profile.weeks;
  c.n_videos_per_week = 3;
  c.n_quizzes_per_week =
      std::clamp(static_cast<int>(std::lround(3.0 * profile.metadata.quiz_video_ratio)), 1, 30);
  c.pass_rate = std::clamp(profile.metadata.success_rate, 0.25, 0.75);
  // Compulsory flipped courses keep failing students around longer.
  c.engagement_decay_fail = profile.metadata.setting == CourseSetting::Flipped ? 0.9 : 0.75;
  c.seed = fnv1a64(profile.course_id) % 1000003;
  c.metadata = profile.metadata;
  return c;
}

std::vector<std::string> preset_names() {
  return {"setting-fp", "setting-la", "active-learning", "optimality", "language", "separable", "demo"};
}

Preset make_preset(std::string_view name) {
  auto pair = [](const char* n, const char* d, const char* a, const char* b) {
    return Preset{n, d, {synthetic_from_profile(course_profile(a)), synthetic_from_profile(course_profile(b))}};
  };
  if (name == "setting-fp") return pair("setting-fp", "flipped vs MOOC, functional programming", "flip-fp", "mooc-fp");
  if (name == "setting-la") return pair("setting-la", "flipped vs MOOC, linear algebra", "flip-la", "mooc-la");
  if (name == "active-learning")
    return pair("active-learning", "high vs low quiz-to-video ratio", "an2", "geo");
  if (name == "optimality") return pair("optimality", "higher vs lower success rate", "an2", "an1");
  if (name == "language") return pair("language", "English vs French audience", "va1", "va2");
  if (name == "separable") {
    SyntheticConfig c;
    c.course_id = "separable";
    c.n_students = 200;
    c.weeks = 4;
    c.n_videos_per_week = 3;
    c.n_quizzes_per_week = 3;
    c.pass_rate = 0.5;
    c.engagement_decay_fail = 0.3;
    c.quiz_accuracy_pass = 0.95;
    c.quiz_accuracy_fail = 0.1;
    c.proactivity_shift_pass = 2;
    c.seed = 7;
    return Preset{"separable", "one course with far-apart pass and fail archetypes", {c}};
  }
  if (name == "demo") {
    SyntheticConfig a;
    a.course_id = "demo-a";
    a.n_students = 200;
    a.weeks = 4;
    a.n_quizzes_per_week = 2;
    a.engagement_decay_fail = 0.7;
    a.seed = 11;
    SyntheticConfig b = a;
    b.course_id = "demo-b";
    b.n_quizzes_per_week = 5;
    b.quiz_accuracy_fail = 0.3;
    b.engagement_decay_fail = 0.85;
    b.seed = 12;
    return Preset{"demo", "small two-course pair with a quiz-heavy second course", {a, b}};
  }
  throw ValidationError(fmt::format("unknown preset '{}' (known: {})", name, fmt::join(preset_names(), ", ")));
}

}  // namespace elab
