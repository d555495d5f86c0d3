#include "elab/checkpoint.hpp"

#include "elab/course_io.hpp"
#include "elab/error.hpp"
#include "elab/logistic.hpp"
#include "elab/recurrent.hpp"

namespace elab {

namespace {

nlohmann::ordered_json tensor_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return j;
}

void read_tensor(const nlohmann::json& j, Eigen::MatrixXd& m) {
  if (j.at("rows").get<Eigen::Index>() != m.rows() || j.at("cols").get<Eigen::Index>() != m.cols())
    throw ShapeError("checkpoint: tensor shape mismatch");
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != m.size()) throw ShapeError("checkpoint: tensor size mismatch");
  m = Eigen::Map<const Eigen::MatrixXd>(data.data(), m.rows(), m.cols());
}

}  // namespace

nlohmann::ordered_json predictor_to_json(const Predictor& predictor) {
  const auto d = predictor.descriptor();
  nlohmann::ordered_json doc;
  doc["format"] = "elab-model";
  doc["version"] = kCheckpointVersion;
  doc["descriptor"] = {{"kind", model_kind_name(d.kind)}, {"weeks", d.weeks}, {"features", d.features}, {"seed", d.seed}};
  auto tensors = nlohmann::ordered_json::array();
  if (const auto* lr = dynamic_cast<const LogisticPredictor*>(&predictor)) {
    doc["hidden"] = nlohmann::ordered_json::array();
    tensors.push_back(tensor_json(lr->weights()));
    tensors.push_back(tensor_json(Eigen::MatrixXd::Constant(1, 1, lr->bias())));
  } else if (const auto* rn = dynamic_cast<const RecurrentPredictor*>(&predictor)) {
    doc["hidden"] = rn->network().hidden();
    for (const auto* t : rn->network().tensors()) tensors.push_back(tensor_json(*t));
  } else {
    throw ValidationError("checkpoint: only trained models can be serialized");
  }
  doc["tensors"] = std::move(tensors);
  return doc;
}

PredictorPtr predictor_from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "elab-model") throw ParseError(0, "checkpoint: not an elab-model file");
  if (doc.value("version", 0) != kCheckpointVersion) throw ParseError(0, "checkpoint: unsupported version");
  const auto& d = doc.at("descriptor");
  const ModelKind kind = parse_model_kind(d.at("kind").get<std::string>());
  const int weeks = d.at("weeks").get<int>();
  const int features = d.at("features").get<int>();
  const auto seed = d.at("seed").get<std::uint64_t>();
  const auto& tensors = doc.at("tensors");
  if (kind == ModelKind::LogisticFlat) {
    if (tensors.size() != 2) throw ShapeError("checkpoint: logistic model needs two tensors");
    Eigen::MatrixXd w(weeks * features, 1), b(1, 1);
    read_tensor(tensors[0], w);
    read_tensor(tensors[1], b);
    return std::make_shared<LogisticPredictor>(weeks, features, w.col(0), b(0, 0), seed);
  }
  if (kind != ModelKind::RecurrentNet) throw ValidationError("checkpoint: unsupported model kind");
  BiLstmNetwork net(weeks, features, doc.at("hidden").get<std::vector<int>>(), 0);
  auto params = net.tensors();
  if (tensors.size() != params.size()) throw ShapeError("checkpoint: tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) read_tensor(tensors[i], *params[i]);
  return std::make_shared<RecurrentPredictor>(std::move(net), seed);
}

void save_predictor(const std::filesystem::path& path, const Predictor& predictor) {
  auto out = open_output(path);
  out << predictor_to_json(predictor).dump() << '\n';
}

PredictorPtr load_predictor(const std::filesystem::path& path) { return predictor_from_json(load_json(path)); }

}  // namespace elab
