#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "elab/model.hpp"

namespace elab {

/// L2-regularized logistic regression on the flattened W*F vector.
class LogisticPredictor final : public Predictor {
 public:
  LogisticPredictor(int weeks, int features, Eigen::VectorXd weights, double bias, std::uint64_t seed)
      : weeks_(weeks), features_(features), weights_(std::move(weights)), bias_(bias), seed_(seed) {}

  PredictorDescriptor descriptor() const override { return {ModelKind::LogisticFlat, weeks_, features_, seed_}; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double bias() const { return bias_; }

 protected:
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& batch) const override;

 private:
  int weeks_;
  int features_;
  Eigen::VectorXd weights_;
  double bias_;
  std::uint64_t seed_;
};

}  // namespace elab
