#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "elab/clickstream.hpp"

namespace elab {

nlohmann::ordered_json metadata_to_json(const CourseMetadata& m);
CourseMetadata metadata_from_json(const nlohmann::json& doc);

nlohmann::ordered_json schedule_to_json(const CourseSchedule& schedule);
/// Throws ParseError on schema violations and ValidationError when the
/// decoded schedule breaks its invariants.
CourseSchedule schedule_from_json(const nlohmann::json& doc);

void write_events(std::ostream& out, std::span<const Interaction> events);
std::string event_to_json_line(const Interaction& ev);

/// CSV with header `student_id,passed`.
void write_labels(std::ostream& out, std::span<const StudentLabel> labels);
std::vector<StudentLabel> read_labels(std::istream& in);

// File wrappers. Missing files raise MissingInputError.
CourseSchedule load_schedule(const std::filesystem::path& path);
std::vector<Interaction> load_events(const std::filesystem::path& path, const CourseSchedule& schedule);
std::vector<StudentLabel> load_labels(const std::filesystem::path& path);
void save_schedule(const std::filesystem::path& path, const CourseSchedule& schedule);
void save_events(const std::filesystem::path& path, std::span<const Interaction> events);
void save_labels(const std::filesystem::path& path, std::span<const StudentLabel> labels);

/// Opens a file for reading, raising MissingInputError if it is absent.
std::ifstream open_input(const std::filesystem::path& path);
/// Opens a file for writing, creating parent directories.
std::ofstream open_output(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);

}  // namespace elab
