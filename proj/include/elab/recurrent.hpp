#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "elab/model.hpp"

namespace elab {

/// Weights of one LSTM direction. Gate blocks are stacked i, f, g, o.
struct LstmWeights {
  Eigen::MatrixXd wx;  // 4h x in
  Eigen::MatrixXd wh;  // 4h x h
  Eigen::MatrixXd b;   // 4h x 1
};

/// Stack of bidirectional LSTM layers over the week axis followed by a
/// single sigmoid unit. Every layer but the last returns the full sequence;
/// the last contributes its final forward and backward states.
class BiLstmNetwork {
 public:
  BiLstmNetwork() = default;
  BiLstmNetwork(int weeks, int features, std::vector<int> hidden, std::uint64_t seed);

  int weeks() const { return weeks_; }
  int features() const { return features_; }
  const std::vector<int>& hidden() const { return hidden_; }

  /// Pass probabilities for a batch of flattened instances.
  Eigen::VectorXd forward(const Eigen::MatrixXd& batch) const;

  /// Mean binary cross-entropy; writes d(loss)/d(params) into `grad`,
  /// which must have this network's shape (see zeros_like).
  double loss_and_gradient(const Eigen::MatrixXd& batch, const Eigen::VectorXd& targets,
                           BiLstmNetwork& grad) const;

  BiLstmNetwork zeros_like() const;

  /// All parameter tensors in a fixed order.
  std::vector<Eigen::MatrixXd*> tensors();
  std::vector<const Eigen::MatrixXd*> tensors() const;

 private:
  int weeks_ = 0;
  int features_ = 0;
  std::vector<int> hidden_;
  std::vector<LstmWeights> forward_;   // per layer
  std::vector<LstmWeights> backward_;  // per layer
  Eigen::MatrixXd dense_w_;            // 1 x 2h_last
  Eigen::MatrixXd dense_b_;            // 1 x 1
};

class RecurrentPredictor final : public Predictor {
 public:
  RecurrentPredictor(BiLstmNetwork net, std::uint64_t seed) : net_(std::move(net)), seed_(seed) {}

  PredictorDescriptor descriptor() const override {
    return {ModelKind::RecurrentNet, net_.weeks(), net_.features(), seed_};
  }
  const BiLstmNetwork& network() const { return net_; }

 protected:
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& batch) const override;

 private:
  BiLstmNetwork net_;
  std::uint64_t seed_;
};

}  // namespace elab
