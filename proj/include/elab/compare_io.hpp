#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "elab/compare.hpp"

namespace elab {

nlohmann::ordered_json ranking_to_json(const AggregatedRanking& r);
AggregatedRanking ranking_from_json(const nlohmann::json& doc);

/// `{"rankings": [...]}`.
void save_rankings(const std::filesystem::path& path, std::span<const AggregatedRanking> rankings);
std::vector<AggregatedRanking> load_rankings(const std::filesystem::path& path);

/// CSV with a `label` corner cell, labeled header row and first column.
void write_matrix_csv(std::ostream& out, const ComparisonMatrix& m);
ComparisonMatrix read_matrix_csv(std::istream& in, Metric metric);

/// {pair, method, zero_change, positive:[{feature, delta, period}], negative:[...]}.
nlohmann::ordered_json insight_to_json(const PairInsight& insight);

}  // namespace elab
