#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "elab/explanation.hpp"

namespace elab {

/// Long CSV `student_id,method,feature,week,raw,normalized,sign`, one row per
/// (student, week, feature) in week-major order.
void write_explanations_csv(std::ostream& out, std::span<const Explanation> explanations,
                            std::span<const std::string> feature_names);

/// Reads the long CSV back; week/feature shape comes from the rows.
std::vector<Explanation> read_explanations_csv(std::istream& in, std::span<const std::string> feature_names,
                                               int weeks);

/// JSON metadata {method, seed, config, students:[{student_id, base_value, notes}]}.
nlohmann::ordered_json explanations_metadata(std::span<const Explanation> explanations, Method method,
                                             std::uint64_t seed, const nlohmann::ordered_json& config);

/// Writes `<stem>.csv` and `<stem>.json`.
void save_explanations(const std::filesystem::path& stem, std::span<const Explanation> explanations,
                       std::span<const std::string> feature_names, Method method, std::uint64_t seed,
                       const nlohmann::ordered_json& config);
/// Loads `<stem>.csv`, restoring base values and notes from `<stem>.json`.
std::vector<Explanation> load_explanations(const std::filesystem::path& stem,
                                           std::span<const std::string> feature_names, int weeks,
                                           const std::string& course_id);

}  // namespace elab
