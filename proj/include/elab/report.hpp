#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "elab/compare.hpp"

namespace elab {

inline constexpr double kDisplayThreshold = 1e-4;

/// Feature rows for a heatmap: per ranking, the feature with the largest
/// positive score and the one with the most negative score (lowest index on
/// ties, none when no score has that sign). Union, ascending feature index.
std::vector<std::size_t> heatmap_rows(std::span<const AggregatedRanking> rankings);

struct HeatmapSvg {
  std::string svg;
  bool all_blank = false;
};

/// One panel per ranking (method x course), feature rows by week columns,
/// colored by the signed week profile. Cells with |value| below the
/// threshold are left blank; positive and negative values use two hues.
HeatmapSvg heatmap_svg(std::span<const AggregatedRanking> rankings, std::span<const std::size_t> rows,
                       double threshold = kDisplayThreshold);

/// Labeled n x n grid with the cell values printed.
std::string matrix_svg(const ComparisonMatrix& matrix);

/// Mean off-diagonal cell over pairs with the same method (within) and with
/// different methods (cross). Labels are "<method>/<course>". NaN when a
/// group is empty.
std::pair<double, double> within_cross_means(const ComparisonMatrix& matrix);

std::string summary_text(std::span<const std::pair<std::string, double>> bac,
                         std::span<const AggregatedRanking> rankings, std::span<const ComparisonMatrix> matrices,
                         const nlohmann::json& insights, std::span<const std::string> warnings);

}  // namespace elab
