#include "elab/explanation_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "elab/course_io.hpp"
#include "elab/error.hpp"

namespace elab {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& s, std::size_t line) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ParseError(line, fmt::format("bad number '{}'", s));
  return v;
}

long to_int(const std::string& s, std::size_t line) {
  long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ParseError(line, fmt::format("bad integer '{}'", s));
  return v;
}

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  auto p = stem;
  p += ext;
  return p;
}

}  // namespace

void write_explanations_csv(std::ostream& out, std::span<const Explanation> explanations,
                            std::span<const std::string> feature_names) {
  out << "student_id,method,feature,week,raw,normalized,sign\n";
  for (const auto& e : explanations) {
    if (static_cast<std::size_t>(e.features) != feature_names.size() || e.dims() != static_cast<std::size_t>(e.weeks * e.features))
      throw ShapeError(fmt::format("explanation of {} does not match {} features", e.student_id, feature_names.size()));
    for (int w = 0; w < e.weeks; ++w)
      for (int f = 0; f < e.features; ++f) {
        const auto i = static_cast<std::size_t>(w * e.features + f);
        out << fmt::format("{},{},{},{},{},{},{}\n", e.student_id, method_name(e.method),
                           feature_names[static_cast<std::size_t>(f)], w, e.scores[i], e.normalized[i], e.signs[i]);
      }
  }
}

std::vector<Explanation> read_explanations_csv(std::istream& in, std::span<const std::string> feature_names,
                                               int weeks) {
  std::map<std::string, std::size_t> feature_pos;
  for (std::size_t f = 0; f < feature_names.size(); ++f) feature_pos[feature_names[f]] = f;
  const int F = static_cast<int>(feature_names.size());
  const auto D = static_cast<std::size_t>(weeks * F);

  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || line != "student_id,method,feature,week,raw,normalized,sign")
    throw ParseError(1, "expected explanation CSV header");

  std::vector<Explanation> out;
  std::vector<std::vector<std::uint8_t>> seen;
  std::map<std::string, std::size_t> by_student;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 7) throw ParseError(lineno, fmt::format("expected 7 columns, found {}", cells.size()));
    const auto fit = feature_pos.find(cells[2]);
    if (fit == feature_pos.end()) throw ParseError(lineno, fmt::format("unknown feature '{}'", cells[2]));
    const long w = to_int(cells[3], lineno);
    if (w < 0 || w >= weeks) throw ParseError(lineno, fmt::format("week {} out of range", w));
    auto [it, fresh] = by_student.try_emplace(cells[0], out.size());
    if (fresh) {
      Explanation e;
      e.student_id = cells[0];
      e.method = parse_method(cells[1]);
      e.weeks = weeks;
      e.features = F;
      e.scores.assign(D, 0.0);
      e.normalized.assign(D, 0.0);
      e.signs.assign(D, 0);
      out.push_back(std::move(e));
      seen.emplace_back(D, 0);
    }
    auto& e = out[it->second];
    if (method_name(e.method) != cells[1]) throw ParseError(lineno, "mixed methods for one student");
    const auto i = static_cast<std::size_t>(w) * static_cast<std::size_t>(F) + fit->second;
    if (seen[it->second][i]) throw ParseError(lineno, "duplicate cell");
    seen[it->second][i] = 1;
    e.scores[i] = to_double(cells[4], lineno);
    e.normalized[i] = to_double(cells[5], lineno);
    e.signs[i] = static_cast<int>(to_int(cells[6], lineno));
  }
  for (std::size_t s = 0; s < out.size(); ++s)
    for (auto v : seen[s])
      if (!v) throw ParseError(lineno, fmt::format("explanation of {} is incomplete", out[s].student_id));
  return out;
}

nlohmann::ordered_json explanations_metadata(std::span<const Explanation> explanations, Method method,
                                             std::uint64_t seed, const nlohmann::ordered_json& config) {
  nlohmann::ordered_json doc;
  doc["method"] = method_name(method);
  doc["seed"] = seed;
  doc["config"] = config;
  auto students = nlohmann::ordered_json::array();
  for (const auto& e : explanations) {
    nlohmann::ordered_json s;
    s["student_id"] = e.student_id;
    s["base_value"] = e.base_value ? nlohmann::ordered_json(*e.base_value) : nlohmann::ordered_json(nullptr);
    s["notes"] = e.notes;
    students.push_back(std::move(s));
  }
  doc["students"] = std::move(students);
  return doc;
}

void save_explanations(const std::filesystem::path& stem, std::span<const Explanation> explanations,
                       std::span<const std::string> feature_names, Method method, std::uint64_t seed,
                       const nlohmann::ordered_json& config) {
  {
    auto out = open_output(with_ext(stem, ".csv"));
    write_explanations_csv(out, explanations, feature_names);
  }
  save_json(with_ext(stem, ".json"), explanations_metadata(explanations, method, seed, config));
}

std::vector<Explanation> load_explanations(const std::filesystem::path& stem,
                                           std::span<const std::string> feature_names, int weeks,
                                           const std::string& course_id) {
  auto in = open_input(with_ext(stem, ".csv"));
  auto out = read_explanations_csv(in, feature_names, weeks);
  const auto meta = load_json(with_ext(stem, ".json"));
  std::map<std::string, const nlohmann::json*> by_student;
  for (const auto& s : meta.at("students")) by_student[s.at("student_id").get<std::string>()] = &s;
  for (auto& e : out) {
    e.course_id = course_id;
    auto it = by_student.find(e.student_id);
    if (it == by_student.end()) continue;
    const auto& s = *it->second;
    if (!s.at("base_value").is_null()) e.base_value = s.at("base_value").get<double>();
    for (const auto& [k, v] : s.at("notes").items()) e.notes[k] = v.get<std::string>();
  }
  return out;
}

}  // namespace elab
