#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "elab/clickstream.hpp"
#include "elab/features.hpp"

namespace elab {

enum class ModelKind { LogisticFlat, RecurrentNet, Function };

std::string_view model_kind_name(ModelKind k);
ModelKind parse_model_kind(std::string_view name);

struct PredictorDescriptor {
  ModelKind kind = ModelKind::Function;
  int weeks = 0;
  int features = 0;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return static_cast<std::size_t>(weeks) * static_cast<std::size_t>(features); }
};

/// Opaque pass-probability model. Each batch row is one student's W x F
/// matrix flattened week-major. Implementations must be pure and thread safe.
class Predictor {
 public:
  virtual ~Predictor() = default;

  /// Throws ShapeError when the column count differs from weeks * features.
  Eigen::VectorXd predict(const Eigen::MatrixXd& batch) const;
  double predict_one(std::span<const double> instance) const;

  virtual PredictorDescriptor descriptor() const = 0;

 protected:
  virtual Eigen::VectorXd predict_rows(const Eigen::MatrixXd& batch) const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

/// Wraps a row function; intended for analytically known black boxes.
class FunctionPredictor final : public Predictor {
 public:
  using RowFn = std::function<double(const Eigen::Ref<const Eigen::RowVectorXd>&)>;

  FunctionPredictor(int weeks, int features, RowFn fn) : weeks_(weeks), features_(features), fn_(std::move(fn)) {}
  /// Single-week convenience: D dims.
  FunctionPredictor(int dims, RowFn fn) : FunctionPredictor(1, dims, std::move(fn)) {}

  PredictorDescriptor descriptor() const override { return {ModelKind::Function, weeks_, features_, 0}; }

 protected:
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& batch) const override;

 private:
  int weeks_;
  int features_;
  RowFn fn_;
};

struct TrainConfig {
  ModelKind kind = ModelKind::RecurrentNet;
  std::vector<int> hidden{32, 64};
  double learning_rate = 1e-3;
  int max_epochs = 200;
  int patience = 20;
  int batch_size = 32;
  double l2 = 1e-4;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  double threshold = 0.5;

  void validate() const;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Per class, round(train_fraction * n_class) students go to train.
/// Throws ValidationError when a class has fewer than two members.
Split stratified_split(std::span<const StudentLabel> labels, const SplitSpec& spec);

/// Design matrix (one row per student) and 0/1 targets for the given ids.
Eigen::MatrixXd design_rows(const FeatureMatrix& matrix, std::span<const std::string> ids);
Eigen::MatrixXd design_rows(const FeatureMatrix& matrix);
Eigen::VectorXd target_vector(std::span<const StudentLabel> labels, std::span<const std::string> ids);

struct TrainReport {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_validation_loss = 0.0;
};

/// Fits the configured model on the training ids; deterministic in config.seed.
/// Throws ValidationError on a single-class training set.
PredictorPtr train(const FeatureMatrix& matrix, std::span<const StudentLabel> labels,
                   std::span<const std::string> train_ids, const TrainConfig& config,
                   TrainReport* report = nullptr);

/// (TPR + TNR) / 2 with "pass" predicted when p >= threshold.
double balanced_accuracy(std::span<const double> probabilities, const std::vector<bool>& labels,
                         double threshold = 0.5);

}  // namespace elab
