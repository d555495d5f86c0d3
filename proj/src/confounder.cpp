#include "elab/confounder.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "elab/error.hpp"

namespace elab {

ConfounderResult counterfactual_confounder(const Predictor& predictor, std::span<const double> instance,
                                           const Background& background, const ConfounderConfig& config) {
  const auto desc = predictor.descriptor();
  const std::size_t D = desc.input_dim();
  if (instance.size() != D || background.dims() != D)
    throw ShapeError(fmt::format("counterfactual_confounder: instance has {} dims, model expects {}, background {}",
                                 instance.size(), D, background.dims()));
  if (!(config.step > 0.0) || config.max_iters < 0)
    throw ValidationError("counterfactual_confounder: step must be positive and max_iters non-negative");

  std::vector<double> x(instance.begin(), instance.end());
  const double p0 = predictor.predict_one(x);
  if (!std::isfinite(p0)) throw NumericError("counterfactual_confounder: non-finite prediction");
  const bool start_pass = p0 >= config.threshold;
  // Positive when the probability moves toward (and past) the boundary.
  auto progress = [&](double p) { return start_pass ? -p : p; };

  std::vector<double> slope_sum(D, 0.0);  // accumulated dp along each dimension's moves
  double p = p0;
  ConfounderResult result;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    std::vector<std::size_t> movable;
    for (std::size_t d = 0; d < D; ++d)
      if (x[d] != background.mean[d]) movable.push_back(d);
    if (movable.empty()) break;

    Eigen::MatrixXd candidates(static_cast<Eigen::Index>(movable.size()), static_cast<Eigen::Index>(D));
    std::vector<double> targets(movable.size());
    for (std::size_t c = 0; c < movable.size(); ++c) {
      const std::size_t d = movable[c];
      const double gap = background.mean[d] - x[d];
      targets[c] = std::abs(gap) <= config.step ? background.mean[d] : x[d] + std::copysign(config.step, gap);
      for (std::size_t j = 0; j < D; ++j) candidates(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = x[j];
      candidates(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d)) = targets[c];
    }
    const Eigen::VectorXd probs = predictor.predict(candidates);
    if (!probs.allFinite()) throw NumericError("counterfactual_confounder: non-finite prediction");

    std::size_t best = 0;
    double best_gain = progress(probs(0)) - progress(p);
    for (std::size_t c = 1; c < movable.size(); ++c) {
      const double gain = progress(probs(static_cast<Eigen::Index>(c))) - progress(p);
      if (gain > best_gain) {
        best = c;
        best_gain = gain;
      }
    }
    if (!(best_gain > 0.0)) break;

    const std::size_t d = movable[best];
    const double moved = targets[best] - x[d];
    const double p_new = probs(static_cast<Eigen::Index>(best));
    slope_sum[d] += (p_new - p) / moved;
    x[d] = targets[best];
    p = p_new;
    result.iterations = iter + 1;
    if ((p >= config.threshold) != start_pass) {
      result.flipped = true;
      break;
    }
  }

  std::vector<double> importance(D, 0.0);
  std::vector<double> emitted(D, 0.0);
  for (std::size_t d = 0; d < D; ++d) {
    const double disp = std::abs(x[d] - instance[d]);
    if (disp == 0.0 || slope_sum[d] == 0.0) continue;
    importance[d] = disp * (slope_sum[d] > 0.0 ? 1.0 : -1.0);
    emitted[d] = -importance[d];
  }

  result.counterfactual_importance = importance;
  result.explanation = make_explanation(Method::Confounder, desc.weeks, desc.features, std::move(emitted));
  result.explanation.notes["flipped"] = result.flipped ? "true" : "false";
  result.explanation.notes["iterations"] = std::to_string(result.iterations);
  return result;
}

}  // namespace elab
