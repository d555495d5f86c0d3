#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace elab {

enum class Action {
  VideoLoad,
  VideoPlay,
  VideoPause,
  VideoStop,
  VideoSeek,
  VideoSpeedChange,
  QuizSubmit,
};

/// Wire name of an action ("video.play", "quiz.submit", ...).
std::string_view action_name(Action a);
std::optional<Action> parse_action(std::string_view name);
inline bool is_video_action(Action a) { return a != Action::QuizSubmit; }

/// One clickstream event. Timestamps are integer seconds since course start.
struct Interaction {
  std::string student_id;
  std::int64_t timestamp = 0;
  Action action = Action::VideoLoad;
  std::string object_id;
  std::optional<bool> correct;       // QuizSubmit
  std::optional<double> seek_from;   // VideoSeek
  std::optional<double> seek_to;     // VideoSeek
  std::optional<double> speed;       // VideoSpeedChange
  std::optional<double> position;    // other video actions

  bool operator==(const Interaction&) const = default;
};

enum class ObjectKind { Video, Quiz };

struct LearningObject {
  std::string object_id;
  ObjectKind kind = ObjectKind::Video;
  int scheduled_week = 0;
  std::optional<double> duration_sec;  // videos only

  bool operator==(const LearningObject&) const = default;
};

enum class CourseSetting { MOOC, Flipped };

/// Descriptive course facts, carried through to reports untouched.
struct CourseMetadata {
  CourseSetting setting = CourseSetting::MOOC;
  std::string title;
  std::string field;
  std::string language;
  std::string level;
  double quiz_video_ratio = 0.0;
  double success_rate = 0.0;
  int students = 0;

  bool operator==(const CourseMetadata&) const = default;
};

struct CourseSchedule {
  std::string course_id;
  int weeks = 1;
  std::int64_t seconds_per_week = 604800;
  std::vector<LearningObject> objects;
  std::optional<CourseMetadata> metadata;

  const LearningObject* find(std::string_view object_id) const;
  bool operator==(const CourseSchedule&) const = default;
};

struct StudentLabel {
  std::string student_id;
  bool passed = false;

  bool operator==(const StudentLabel&) const = default;
};

/// A maximal run of one student's events with no gap above the threshold.
/// `events` views the caller's storage.
struct Session {
  std::string student_id;
  std::span<const Interaction> events;
  std::int64_t start = 0;
  std::int64_t end = 0;

  std::int64_t duration() const { return end - start; }
};

inline constexpr std::int64_t kDefaultSessionGap = 1800;

/// Parses JSON Lines events against a schedule. Blank lines are skipped.
/// Result is sorted by (student_id, timestamp), file order kept for ties.
/// Throws ParseError naming the offending line.
std::vector<Interaction> parse_events(std::istream& in, const CourseSchedule& schedule);

/// floor(timestamp / seconds_per_week), clamped into [0, weeks - 1].
int assign_week(std::int64_t timestamp, const CourseSchedule& schedule);

/// Splits one student's time-ordered events into sessions. Throws
/// ValidationError when the input is not sorted by timestamp.
std::vector<Session> sessionize(std::span<const Interaction> events,
                                std::int64_t gap_threshold_sec = kDefaultSessionGap);

/// Throws ValidationError when the schedule itself is inconsistent
/// (non-positive weeks, week out of range, duration rule broken).
void check_schedule(const CourseSchedule& schedule);

enum class FindingKind {
  OrphanEvents,     // events for a student without a label
  OrphanLabel,      // label for a student without events
  DuplicateLabel,
  OutOfRangeWeek,
  DuplicateObject,
  UnknownObject,
  KindMismatch,
  BadDuration,
};

std::string_view finding_kind_name(FindingKind k);

struct Finding {
  FindingKind kind;
  std::string subject;
  std::string detail;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const { return findings.empty(); }
  std::size_t count(FindingKind k) const;
  std::string describe() const;
};

ValidationReport validate_course(const CourseSchedule& schedule,
                                 std::span<const Interaction> events,
                                 std::span<const StudentLabel> labels);

}  // namespace elab
