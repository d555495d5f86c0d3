#pragma once

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "elab/features.hpp"

namespace elab {

/// Long-format CSV: `student_id,week,feature,value,imputed`.
void write_feature_csv(std::ostream& out, const FeatureMatrix& m);
nlohmann::ordered_json feature_sidecar(const FeatureMatrix& m);
/// Rebuilds a matrix from the sidecar (shape) and the long CSV (cells).
FeatureMatrix read_feature_matrix(std::istream& csv, const nlohmann::json& sidecar);

void save_feature_matrix(const std::filesystem::path& csv_path, const FeatureMatrix& m);
/// Sidecar path is the CSV path with a .json extension.
FeatureMatrix load_feature_matrix(const std::filesystem::path& csv_path);

nlohmann::ordered_json stats_to_json(const NormalizationStats& stats);
NormalizationStats stats_from_json(const nlohmann::json& doc);

}  // namespace elab
