#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "elab/explanation.hpp"
#include "elab/model.hpp"

namespace elab {

struct LimeConfig {
  int n_features = 10;
  int n_samples = 5000;
  std::optional<double> kernel_width;  // default 0.75 * sqrt(D)
  double ridge = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Local surrogate explanation. Perturbations are Gaussian around the
/// instance with the background's per-dimension spread; the surrogate is a
/// weighted ridge regression on standardized offsets, so coefficients are
/// the probability change per background standard deviation. At most
/// n_features dimensions receive a nonzero score.
Explanation lime_explain(const Predictor& predictor, std::span<const double> instance,
                         const Background& background, const LimeConfig& config);

}  // namespace elab
