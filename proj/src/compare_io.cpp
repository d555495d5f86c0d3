#include "elab/compare_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "elab/course_io.hpp"
#include "elab/error.hpp"

namespace elab {

nlohmann::ordered_json ranking_to_json(const AggregatedRanking& r) {
  nlohmann::ordered_json j;
  j["course_id"] = r.course_id;
  j["method"] = method_name(r.method);
  j["n_students"] = r.n_students;
  j["weeks"] = r.weeks;
  j["features"] = r.features;
  j["scores"] = r.scores;
  j["ranks"] = r.ranks;
  j["week_signed"] = r.week_signed;
  j["week_magnitude"] = r.week_magnitude;
  return j;
}

AggregatedRanking ranking_from_json(const nlohmann::json& doc) {
  try {
    AggregatedRanking r;
    r.course_id = doc.at("course_id").get<std::string>();
    r.method = parse_method(doc.at("method").get<std::string>());
    r.n_students = doc.at("n_students").get<std::size_t>();
    r.weeks = doc.at("weeks").get<int>();
    r.features = doc.at("features").get<std::vector<std::string>>();
    r.scores = doc.at("scores").get<std::vector<double>>();
    r.ranks = doc.at("ranks").get<std::vector<double>>();
    r.week_signed = doc.at("week_signed").get<std::vector<double>>();
    r.week_magnitude = doc.at("week_magnitude").get<std::vector<double>>();
    const std::size_t F = r.features.size();
    if (r.scores.size() != F || r.ranks.size() != F || r.week_signed.size() != F * static_cast<std::size_t>(r.weeks) ||
        r.week_magnitude.size() != r.week_signed.size())
      throw ValidationError(fmt::format("ranking {}/{} has inconsistent lengths", method_name(r.method), r.course_id));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, fmt::format("ranking: {}", e.what()));
  }
}

void save_rankings(const std::filesystem::path& path, std::span<const AggregatedRanking> rankings) {
  nlohmann::ordered_json doc;
  doc["rankings"] = nlohmann::ordered_json::array();
  for (const auto& r : rankings) doc["rankings"].push_back(ranking_to_json(r));
  save_json(path, doc);
}

std::vector<AggregatedRanking> load_rankings(const std::filesystem::path& path) {
  const auto doc = load_json(path);
  std::vector<AggregatedRanking> out;
  if (!doc.contains("rankings")) throw ParseError(0, fmt::format("{}: missing 'rankings'", path.string()));
  for (const auto& r : doc["rankings"]) out.push_back(ranking_from_json(r));
  return out;
}

void write_matrix_csv(std::ostream& out, const ComparisonMatrix& m) {
  out << "label";
  for (const auto& l : m.labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.labels[i];
    for (std::size_t j = 0; j < m.size(); ++j) out << ',' << fmt::format("{}", m.at(i, j));
    out << '\n';
  }
}

ComparisonMatrix read_matrix_csv(std::istream& in, Metric metric) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      auto c = line.find(',', start);
      cells.push_back(line.substr(start, c - start));
      if (c == std::string::npos) break;
      start = c + 1;
    }
    return cells;
  };
  ComparisonMatrix m;
  m.metric = metric;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty matrix CSV");
  auto header = split(line);
  if (header.empty() || header[0] != "label") throw ParseError(1, "expected 'label' corner cell");
  m.labels.assign(header.begin() + 1, header.end());
  const std::size_t n = m.labels.size();
  std::size_t lineno = 1;
  for (std::size_t i = 0; i < n; ++i) {
    ++lineno;
    if (!std::getline(in, line)) throw ParseError(lineno, "matrix CSV is truncated");
    auto cells = split(line);
    if (cells.size() != n + 1 || cells[0] != m.labels[i]) throw ParseError(lineno, "matrix row does not match header");
    for (std::size_t j = 1; j <= n; ++j) {
      double v = 0;
      auto [p, ec] = std::from_chars(cells[j].data(), cells[j].data() + cells[j].size(), v);
      if (ec != std::errc() || p != cells[j].data() + cells[j].size())
        throw ParseError(lineno, fmt::format("bad number '{}'", cells[j]));
      m.cells.push_back(v);
    }
  }
  return m;
}

nlohmann::ordered_json insight_to_json(const PairInsight& insight) {
  auto entries = [](const std::vector<InsightEntry>& v) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : v) {
      nlohmann::ordered_json j;
      j["feature"] = e.feature;
      j["delta"] = e.delta;
      j["period"] = period_name(e.period);
      arr.push_back(std::move(j));
    }
    return arr;
  };
  nlohmann::ordered_json j;
  j["pair"] = {insight.course_a, insight.course_b};
  j["method"] = insight.method;
  j["zero_change"] = insight.zero_change;
  j["positive"] = entries(insight.positive);
  j["negative"] = entries(insight.negative);
  return j;
}

}  // namespace elab
