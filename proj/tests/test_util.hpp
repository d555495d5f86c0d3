#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "elab/clickstream.hpp"
#include "elab/course_io.hpp"

namespace elab::test {

struct Fixture {
  CourseSchedule schedule;
  std::vector<Interaction> events;
  nlohmann::json expected;
};

inline Fixture load_fixture(const std::string& name) {
  const auto doc = load_json(std::filesystem::path(ELAB_FIXTURE_DIR) / name);
  Fixture f;
  f.schedule = schedule_from_json(doc.at("schedule"));
  std::ostringstream lines;
  for (const auto& ev : doc.at("events")) lines << ev.dump() << '\n';
  std::istringstream in(lines.str());
  f.events = parse_events(in, f.schedule);
  f.expected = doc.at("expected");
  return f;
}

inline Interaction ev(std::string sid, std::int64_t t, Action a, std::string obj) {
  Interaction e;
  e.student_id = std::move(sid);
  e.timestamp = t;
  e.action = a;
  e.object_id = std::move(obj);
  return e;
}

inline Interaction submit(std::string sid, std::int64_t t, std::string obj, bool correct) {
  auto e = ev(std::move(sid), t, Action::QuizSubmit, std::move(obj));
  e.correct = correct;
  return e;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("elab_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace elab::test
