#pragma once

#include <span>
#include <vector>

#include "elab/explanation.hpp"
#include "elab/model.hpp"

namespace elab {

struct ConfounderConfig {
  double step = 0.25;  // largest single-coordinate move, input units
  int max_iters = 50;
  double threshold = 0.5;
};

struct ConfounderResult {
  Explanation explanation;                       // emitted (sign-flipped) scores
  std::vector<double> counterfactual_importance;  // pre-flip scores
  bool flipped = false;                          // predicted class changed
  int iterations = 0;
};

/// Greedy counterfactual search that walks one coordinate at a time toward
/// the background mean, always taking the move that pushes the prediction
/// furthest toward the decision boundary, until the class flips or the
/// iteration budget runs out. A dimension's counterfactual importance is
/// |total displacement| times the sign of the observed slope dp/dx; the
/// emitted explanation negates every score.
ConfounderResult counterfactual_confounder(const Predictor& predictor, std::span<const double> instance,
                                           const Background& background, const ConfounderConfig& config);

}  // namespace elab
