#include "elab/clickstream.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "elab/error.hpp"

namespace elab {

namespace {

constexpr std::array<std::pair<Action, std::string_view>, 7> kActionNames{{
    {Action::VideoLoad, "video.load"},
    {Action::VideoPlay, "video.play"},
    {Action::VideoPause, "video.pause"},
    {Action::VideoStop, "video.stop"},
    {Action::VideoSeek, "video.seek"},
    {Action::VideoSpeedChange, "video.speed"},
    {Action::QuizSubmit, "quiz.submit"},
}};

std::optional<double> optional_number(const nlohmann::json& obj, const char* key,
                                      std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ParseError(line, fmt::format("field '{}' must be a number", key));
  return it->get<double>();
}

std::string required_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw ParseError(line, fmt::format("missing string field '{}'", key));
  return it->get<std::string>();
}

Interaction decode_line(const std::string& text, std::size_t line, const CourseSchedule& schedule) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(line, "record is not a JSON object");

  Interaction ev;
  ev.student_id = required_string(obj, "student_id", line);
  ev.object_id = required_string(obj, "object_id", line);

  auto t = obj.find("t");
  if (t == obj.end() || !t->is_number_integer())
    throw ParseError(line, "missing integer field 't'");
  ev.timestamp = t->get<std::int64_t>();
  if (ev.timestamp < 0) throw ParseError(line, "negative timestamp");

  const std::string action = required_string(obj, "action", line);
  auto parsed = parse_action(action);
  if (!parsed) throw ParseError(line, fmt::format("unknown action '{}'", action));
  ev.action = *parsed;

  const LearningObject* object = schedule.find(ev.object_id);
  if (!object) throw ParseError(line, fmt::format("unknown object_id '{}'", ev.object_id));
  const bool video_object = object->kind == ObjectKind::Video;
  if (video_object != is_video_action(ev.action))
    throw ParseError(line, fmt::format("action '{}' does not apply to {} object '{}'", action,
                                       video_object ? "video" : "quiz", ev.object_id));

  switch (ev.action) {
    case Action::QuizSubmit: {
      auto c = obj.find("correct");
      if (c == obj.end() || !c->is_boolean())
        throw ParseError(line, "quiz.submit requires boolean field 'correct'");
      ev.correct = c->get<bool>();
      break;
    }
    case Action::VideoSeek:
      ev.seek_from = optional_number(obj, "seek_from", line);
      ev.seek_to = optional_number(obj, "seek_to", line);
      if (!ev.seek_from || !ev.seek_to)
        throw ParseError(line, "video.seek requires 'seek_from' and 'seek_to'");
      if (*ev.seek_from < 0 || *ev.seek_to < 0) throw ParseError(line, "negative seek position");
      break;
    case Action::VideoSpeedChange:
      ev.speed = optional_number(obj, "speed", line);
      if (!ev.speed) throw ParseError(line, "video.speed requires 'speed'");
      if (!(*ev.speed > 0)) throw ParseError(line, "speed must be positive");
      break;
    default:
      ev.position = optional_number(obj, "position", line);
      if (ev.position && *ev.position < 0) throw ParseError(line, "negative position");
      break;
  }
  return ev;
}

}  // namespace

std::string_view action_name(Action a) {
  for (const auto& [action, name] : kActionNames)
    if (action == a) return name;
  return "unknown";
}

std::optional<Action> parse_action(std::string_view name) {
  for (const auto& [action, n] : kActionNames)
    if (n == name) return action;
  return std::nullopt;
}

const LearningObject* CourseSchedule::find(std::string_view object_id) const {
  for (const auto& o : objects)
    if (o.object_id == object_id) return &o;
  return nullptr;
}

std::vector<Interaction> parse_events(std::istream& in, const CourseSchedule& schedule) {
  std::vector<Interaction> events;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    events.push_back(decode_line(text, line, schedule));
  }
  std::stable_sort(events.begin(), events.end(), [](const Interaction& a, const Interaction& b) {
    if (a.student_id != b.student_id) return a.student_id < b.student_id;
    return a.timestamp < b.timestamp;
  });
  return events;
}

int assign_week(std::int64_t timestamp, const CourseSchedule& schedule) {
  if (timestamp <= 0) return 0;
  const std::int64_t week = timestamp / schedule.seconds_per_week;
  return static_cast<int>(std::min<std::int64_t>(week, schedule.weeks - 1));
}

std::vector<Session> sessionize(std::span<const Interaction> events, std::int64_t gap_threshold_sec) {
  std::vector<Session> sessions;
  std::size_t first = 0;
  for (std::size_t i = 1; i <= events.size(); ++i) {
    if (i < events.size()) {
      if (events[i].timestamp < events[i - 1].timestamp)
        throw ValidationError(fmt::format("sessionize: events out of order at index {}", i));
      if (events[i].timestamp - events[i - 1].timestamp <= gap_threshold_sec) continue;
    }
    if (i > first) {
      auto slice = events.subspan(first, i - first);
      sessions.push_back({slice.front().student_id, slice, slice.front().timestamp,
                          slice.back().timestamp});
    }
    first = i;
  }
  return sessions;
}

void check_schedule(const CourseSchedule& schedule) {
  if (schedule.weeks < 1) throw ValidationError("schedule: weeks must be positive");
  if (schedule.seconds_per_week < 1)
    throw ValidationError("schedule: seconds_per_week must be positive");
  std::unordered_set<std::string> seen;
  for (const auto& o : schedule.objects) {
    if (!seen.insert(o.object_id).second)
      throw ValidationError(fmt::format("schedule: duplicate object_id '{}'", o.object_id));
    if (o.scheduled_week < 0 || o.scheduled_week >= schedule.weeks)
      throw ValidationError(fmt::format("schedule: object '{}' week out of range", o.object_id));
    const bool is_video = o.kind == ObjectKind::Video;
    if (is_video != o.duration_sec.has_value() || (is_video && !(*o.duration_sec > 0)))
      throw ValidationError(fmt::format("schedule: object '{}' duration rule", o.object_id));
  }
}

std::string_view finding_kind_name(FindingKind k) {
  switch (k) {
    case FindingKind::OrphanEvents: return "orphan-events";
    case FindingKind::OrphanLabel: return "orphan-label";
    case FindingKind::DuplicateLabel: return "duplicate-label";
    case FindingKind::OutOfRangeWeek: return "out-of-range-week";
    case FindingKind::DuplicateObject: return "duplicate-object";
    case FindingKind::UnknownObject: return "unknown-object";
    case FindingKind::KindMismatch: return "kind-mismatch";
    case FindingKind::BadDuration: return "bad-duration";
  }
  return "unknown";
}

std::size_t ValidationReport::count(FindingKind k) const {
  return static_cast<std::size_t>(
      std::count_if(findings.begin(), findings.end(), [k](const Finding& f) { return f.kind == k; }));
}

std::string ValidationReport::describe() const {
  std::ostringstream out;
  for (const auto& f : findings)
    out << finding_kind_name(f.kind) << ' ' << f.subject << ": " << f.detail << '\n';
  return out.str();
}

ValidationReport validate_course(const CourseSchedule& schedule,
                                 std::span<const Interaction> events,
                                 std::span<const StudentLabel> labels) {
  ValidationReport report;
  auto add = [&](FindingKind kind, std::string subject, std::string detail) {
    report.findings.push_back({kind, std::move(subject), std::move(detail)});
  };

  std::map<std::string, const LearningObject*> objects;
  for (const auto& o : schedule.objects) {
    if (!objects.emplace(o.object_id, &o).second)
      add(FindingKind::DuplicateObject, o.object_id, "object_id appears more than once");
    if (o.scheduled_week < 0 || o.scheduled_week >= schedule.weeks)
      add(FindingKind::OutOfRangeWeek, o.object_id,
          fmt::format("scheduled_week {} outside [0, {})", o.scheduled_week, schedule.weeks));
    const bool is_video = o.kind == ObjectKind::Video;
    if (is_video != o.duration_sec.has_value() || (is_video && !(*o.duration_sec > 0)))
      add(FindingKind::BadDuration, o.object_id, "duration must be present and positive iff video");
  }

  std::map<std::string, int> label_count;
  for (const auto& l : labels) ++label_count[l.student_id];
  for (const auto& [id, n] : label_count)
    if (n > 1) add(FindingKind::DuplicateLabel, id, fmt::format("{} labels", n));

  std::set<std::string> with_events;
  for (const auto& ev : events) {
    with_events.insert(ev.student_id);
    auto it = objects.find(ev.object_id);
    if (it == objects.end()) {
      add(FindingKind::UnknownObject, ev.object_id, "referenced by an event but not scheduled");
      continue;
    }
    if ((it->second->kind == ObjectKind::Video) != is_video_action(ev.action))
      add(FindingKind::KindMismatch, ev.object_id,
          fmt::format("{} at t={}", action_name(ev.action), ev.timestamp));
  }
  for (const auto& id : with_events)
    if (!label_count.contains(id)) add(FindingKind::OrphanEvents, id, "events without a label");
  for (const auto& [id, n] : label_count)
    if (!with_events.contains(id)) add(FindingKind::OrphanLabel, id, "label without events");
  return report;
}

}  // namespace elab
