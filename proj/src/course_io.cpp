#include "elab/course_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "elab/error.hpp"

namespace elab {

namespace {

std::string_view setting_name(CourseSetting s) { return s == CourseSetting::MOOC ? "MOOC" : "Flipped"; }

CourseSetting parse_setting(const std::string& s) {
  if (s == "MOOC") return CourseSetting::MOOC;
  if (s == "Flipped") return CourseSetting::Flipped;
  throw ParseError(0, fmt::format("schedule: unknown setting '{}'", s));
}

template <typename T>
T field(const nlohmann::json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(0, fmt::format("schedule: missing field '{}'", key));
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(0, fmt::format("schedule: field '{}' has the wrong type", key));
  }
}

}  // namespace

nlohmann::ordered_json metadata_to_json(const CourseMetadata& m) {
  nlohmann::ordered_json meta;
  meta["setting"] = setting_name(m.setting);
  meta["title"] = m.title;
  meta["field"] = m.field;
  meta["language"] = m.language;
  meta["level"] = m.level;
  meta["quiz_video_ratio"] = m.quiz_video_ratio;
  meta["success_rate"] = m.success_rate;
  meta["students"] = m.students;
  return meta;
}

CourseMetadata metadata_from_json(const nlohmann::json& j) {
  CourseMetadata m;
  m.setting = parse_setting(field<std::string>(j, "setting"));
  m.title = j.value("title", "");
  m.field = j.value("field", "");
  m.language = j.value("language", "");
  m.level = j.value("level", "");
  m.quiz_video_ratio = j.value("quiz_video_ratio", 0.0);
  m.success_rate = j.value("success_rate", 0.0);
  m.students = j.value("students", 0);
  return m;
}

nlohmann::ordered_json schedule_to_json(const CourseSchedule& schedule) {
  nlohmann::ordered_json doc;
  doc["course_id"] = schedule.course_id;
  doc["weeks"] = schedule.weeks;
  doc["seconds_per_week"] = schedule.seconds_per_week;
  auto& objects = doc["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : schedule.objects) {
    nlohmann::ordered_json j;
    j["object_id"] = o.object_id;
    j["kind"] = o.kind == ObjectKind::Video ? "video" : "quiz";
    j["scheduled_week"] = o.scheduled_week;
    if (o.duration_sec) j["duration_sec"] = *o.duration_sec;
    objects.push_back(std::move(j));
  }
  if (schedule.metadata) doc["metadata"] = metadata_to_json(*schedule.metadata);
  return doc;
}

CourseSchedule schedule_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError(0, "schedule: document is not an object");
  CourseSchedule s;
  s.course_id = field<std::string>(doc, "course_id");
  s.weeks = field<int>(doc, "weeks");
  s.seconds_per_week = doc.contains("seconds_per_week") ? field<std::int64_t>(doc, "seconds_per_week")
                                                        : std::int64_t{604800};
  for (const auto& j : field<nlohmann::json>(doc, "objects")) {
    LearningObject o;
    o.object_id = field<std::string>(j, "object_id");
    const auto kind = field<std::string>(j, "kind");
    if (kind == "video")
      o.kind = ObjectKind::Video;
    else if (kind == "quiz")
      o.kind = ObjectKind::Quiz;
    else
      throw ParseError(0, fmt::format("schedule: unknown object kind '{}'", kind));
    o.scheduled_week = field<int>(j, "scheduled_week");
    if (j.contains("duration_sec") && !j["duration_sec"].is_null())
      o.duration_sec = field<double>(j, "duration_sec");
    s.objects.push_back(std::move(o));
  }
  if (auto it = doc.find("metadata"); it != doc.end() && it->is_object()) s.metadata = metadata_from_json(*it);
  check_schedule(s);
  return s;
}

std::string event_to_json_line(const Interaction& ev) {
  nlohmann::ordered_json j;
  j["student_id"] = ev.student_id;
  j["t"] = ev.timestamp;
  j["action"] = action_name(ev.action);
  j["object_id"] = ev.object_id;
  if (ev.correct) j["correct"] = *ev.correct;
  if (ev.seek_from) j["seek_from"] = *ev.seek_from;
  if (ev.seek_to) j["seek_to"] = *ev.seek_to;
  if (ev.speed) j["speed"] = *ev.speed;
  if (ev.position) j["position"] = *ev.position;
  return j.dump();
}

void write_events(std::ostream& out, std::span<const Interaction> events) {
  for (const auto& ev : events) out << event_to_json_line(ev) << '\n';
}

void write_labels(std::ostream& out, std::span<const StudentLabel> labels) {
  out << "student_id,passed\n";
  for (const auto& l : labels) out << l.student_id << ',' << (l.passed ? 1 : 0) << '\n';
}

std::vector<StudentLabel> read_labels(std::istream& in) {
  std::vector<StudentLabel> labels;
  std::string text;
  std::size_t line = 0;
  if (!std::getline(in, text)) throw ParseError(1, "labels: missing header");
  ++line;
  if (!text.empty() && text.back() == '\r') text.pop_back();
  if (text != "student_id,passed") throw ParseError(1, "labels: expected header 'student_id,passed'");
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    const auto comma = text.find(',');
    if (comma == std::string::npos || comma == 0) throw ParseError(line, "labels: expected two fields");
    const std::string value = text.substr(comma + 1);
    if (value != "0" && value != "1") throw ParseError(line, "labels: passed must be 0 or 1");
    labels.push_back({text.substr(0, comma), value == "1"});
  }
  return labels;
}

std::ifstream open_input(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw MissingInputError(path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError(path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json load_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

void save_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

CourseSchedule load_schedule(const std::filesystem::path& path) {
  return schedule_from_json(load_json(path));
}

std::vector<Interaction> load_events(const std::filesystem::path& path, const CourseSchedule& schedule) {
  auto in = open_input(path);
  return parse_events(in, schedule);
}

std::vector<StudentLabel> load_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_labels(in);
}

void save_schedule(const std::filesystem::path& path, const CourseSchedule& schedule) {
  save_json(path, schedule_to_json(schedule));
}

void save_events(const std::filesystem::path& path, std::span<const Interaction> events) {
  auto out = open_output(path);
  write_events(out, events);
}

void save_labels(const std::filesystem::path& path, std::span<const StudentLabel> labels) {
  auto out = open_output(path);
  write_labels(out, labels);
}

}  // namespace elab
