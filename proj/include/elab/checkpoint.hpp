#pragma once

#include <filesystem>

#include <json.hpp>

#include "elab/model.hpp"

namespace elab {

inline constexpr int kCheckpointVersion = 1;

/// JSON checkpoint: {"format":"elab-model","version":1,"descriptor":{...},
/// "hidden":[...], "tensors":[{"rows":r,"cols":c,"data":[column-major]}...]}.
nlohmann::ordered_json predictor_to_json(const Predictor& predictor);
PredictorPtr predictor_from_json(const nlohmann::json& doc);

void save_predictor(const std::filesystem::path& path, const Predictor& predictor);
PredictorPtr load_predictor(const std::filesystem::path& path);

}  // namespace elab
