#include "elab/feature_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "elab/course_io.hpp"
#include "elab/error.hpp"

namespace elab {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  if (s == "nan") return std::nan("");
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, fmt::format("not a number: '{}'", s));
  }
}

}  // namespace

void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
  out << "student_id,week,feature,value,imputed\n";
  for (std::size_t s = 0; s < m.n_students(); ++s)
    for (std::size_t w = 0; w < static_cast<std::size_t>(m.weeks); ++w)
      for (std::size_t f = 0; f < m.n_features(); ++f) {
        const double v = m.at(s, w, f);
        out << m.students[s] << ',' << w << ',' << m.features[f] << ','
            << (std::isnan(v) ? std::string("nan") : fmt::format("{}", v)) << ','
            << (m.imputed(s, w, f) ? 1 : 0) << '\n';
      }
}

nlohmann::ordered_json feature_sidecar(const FeatureMatrix& m) {
  nlohmann::ordered_json doc;
  doc["students"] = m.students;
  doc["weeks"] = m.weeks;
  doc["features"] = m.features;
  doc["per_feature_min"] = m.per_feature_min;
  return doc;
}

FeatureMatrix read_feature_matrix(std::istream& csv, const nlohmann::json& sidecar) {
  FeatureMatrix m(sidecar.at("students").get<std::vector<std::string>>(), sidecar.at("weeks").get<int>(),
                  sidecar.at("features").get<std::vector<std::string>>());
  m.per_feature_min = sidecar.at("per_feature_min").get<std::vector<double>>();
  if (m.per_feature_min.size() != m.n_features()) throw ShapeError("sidecar: per_feature_min length");

  std::map<std::string, std::size_t> student_pos, feature_pos;
  for (std::size_t i = 0; i < m.n_students(); ++i) student_pos[m.students[i]] = i;
  for (std::size_t i = 0; i < m.n_features(); ++i) feature_pos[m.features[i]] = i;

  std::string text;
  std::size_t line = 1;
  if (!std::getline(csv, text) || text != "student_id,week,feature,value,imputed")
    throw ParseError(1, "feature CSV: bad header");
  std::size_t cells = 0;
  while (std::getline(csv, text)) {
    ++line;
    if (text.empty()) continue;
    const auto fields = split_csv(text);
    if (fields.size() != 5) throw ParseError(line, "feature CSV: expected 5 fields");
    auto s = student_pos.find(fields[0]);
    auto f = feature_pos.find(fields[2]);
    if (s == student_pos.end() || f == feature_pos.end()) throw ParseError(line, "feature CSV: unknown key");
    const auto w = static_cast<std::size_t>(parse_double(fields[1], line));
    if (w >= static_cast<std::size_t>(m.weeks)) throw ParseError(line, "feature CSV: week out of range");
    const std::size_t idx = m.index(s->second, w, f->second);
    m.values[idx] = parse_double(fields[3], line);
    m.nan_mask[idx] = fields[4] == "1" ? 1 : 0;
    ++cells;
  }
  if (cells != m.values.size()) throw ParseError(0, "feature CSV: cell count does not match sidecar");
  return m;
}

void save_feature_matrix(const std::filesystem::path& csv_path, const FeatureMatrix& m) {
  {
    auto out = open_output(csv_path);
    write_feature_csv(out, m);
  }
  auto sidecar = csv_path;
  save_json(sidecar.replace_extension(".json"), feature_sidecar(m));
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& csv_path) {
  auto sidecar_path = csv_path;
  const auto sidecar = load_json(sidecar_path.replace_extension(".json"));
  auto in = open_input(csv_path);
  return read_feature_matrix(in, sidecar);
}

nlohmann::ordered_json stats_to_json(const NormalizationStats& stats) {
  nlohmann::ordered_json doc;
  doc["features"] = stats.features;
  doc["min"] = stats.min;
  doc["max"] = stats.max;
  return doc;
}

NormalizationStats stats_from_json(const nlohmann::json& doc) {
  NormalizationStats s{doc.at("features").get<std::vector<std::string>>(), doc.at("min").get<std::vector<double>>(),
                       doc.at("max").get<std::vector<double>>()};
  if (s.min.size() != s.features.size() || s.max.size() != s.features.size())
    throw ShapeError("normalization stats: length mismatch");
  return s;
}

}  // namespace elab
