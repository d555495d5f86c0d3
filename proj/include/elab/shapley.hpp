#pragma once

#include <cstdint>
#include <span>

#include "elab/explanation.hpp"
#include "elab/model.hpp"

namespace elab {

inline constexpr std::size_t kExactShapleyMaxDims = 15;

/// Exact Shapley values by enumerating all 2^D coalitions. Absent dims take
/// the background mean. Throws ValidationError when D exceeds the budget.
Explanation exact_shapley(const Predictor& predictor, std::span<const double> instance,
                          const Background& background);

struct KernelShapConfig {
  std::size_t n_coalitions = 2048;
  std::uint64_t seed = 0;
};

/// KernelSHAP: constrained weighted least squares over coalitions under the
/// Shapley kernel. All proper coalitions are used when 2^D - 2 fits in the
/// budget; otherwise coalition sizes are enumerated from the extremes inward
/// while the budget allows and the rest are sampled in complementary pairs.
/// The efficiency constraint sum(phi) = f(x) - v(empty) is exact. When the
/// normal equations are singular a 1e-6 ridge is added and
/// notes["regularized"] is set.
Explanation kernel_shap(const Predictor& predictor, std::span<const double> instance,
                        const Background& background, const KernelShapConfig& config);

}  // namespace elab
