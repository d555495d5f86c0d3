#include "elab/shapley.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <fmt/format.h>

#include "elab/error.hpp"

namespace elab {

namespace {

void check_shapes(const Predictor& predictor, std::span<const double> instance, const Background& background,
                  const char* who) {
  const std::size_t D = predictor.descriptor().input_dim();
  if (instance.size() != D || background.dims() != D)
    throw ShapeError(fmt::format("{}: instance has {} dims, model expects {}, background {}", who, instance.size(),
                                 D, background.dims()));
}

double binomial(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

// Row for a coalition mask: instance where the mask is set, background mean elsewhere.
void fill_row(Eigen::MatrixXd& X, Eigen::Index r, const std::vector<std::uint8_t>& mask,
              std::span<const double> instance, const Background& bg) {
  for (std::size_t d = 0; d < mask.size(); ++d) X(r, static_cast<Eigen::Index>(d)) = mask[d] ? instance[d] : bg.mean[d];
}

}  // namespace

Explanation exact_shapley(const Predictor& predictor, std::span<const double> instance, const Background& background) {
  check_shapes(predictor, instance, background, "exact_shapley");
  const std::size_t D = instance.size();
  if (D > kExactShapleyMaxDims)
    throw ValidationError(fmt::format("exact_shapley: {} dims exceed the enumeration budget of {}", D,
                                      kExactShapleyMaxDims));
  const std::size_t n_masks = std::size_t{1} << D;
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n_masks), static_cast<Eigen::Index>(D));
  for (std::size_t m = 0; m < n_masks; ++m)
    for (std::size_t d = 0; d < D; ++d)
      X(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d)) = (m >> d) & 1 ? instance[d] : background.mean[d];
  const Eigen::VectorXd v = predictor.predict(X);

  // weight(s) = s! (D - s - 1)! / D!
  std::vector<double> weight(D);
  for (std::size_t s = 0; s < D; ++s) weight[s] = 1.0 / (static_cast<double>(D) * binomial(static_cast<int>(D) - 1, static_cast<int>(s)));

  std::vector<double> phi(D, 0.0);
  for (std::size_t m = 0; m < n_masks; ++m) {
    const auto size = static_cast<std::size_t>(std::popcount(m));
    for (std::size_t d = 0; d < D; ++d) {
      if ((m >> d) & 1) continue;
      phi[d] += weight[size] * (v(static_cast<Eigen::Index>(m | (std::size_t{1} << d))) - v(static_cast<Eigen::Index>(m)));
    }
  }
  const auto desc = predictor.descriptor();
  auto e = make_explanation(Method::ExactShapley, desc.weeks, desc.features, std::move(phi));
  e.base_value = v(0);
  return e;
}

Explanation kernel_shap(const Predictor& predictor, std::span<const double> instance, const Background& background,
                        const KernelShapConfig& config) {
  check_shapes(predictor, instance, background, "kernel_shap");
  const std::size_t D = instance.size();
  const auto desc = predictor.descriptor();
  if (D == 0) throw ShapeError("kernel_shap: no dimensions");

  Eigen::MatrixXd ends(2, static_cast<Eigen::Index>(D));
  fill_row(ends, 0, std::vector<std::uint8_t>(D, 0), instance, background);
  fill_row(ends, 1, std::vector<std::uint8_t>(D, 1), instance, background);
  const Eigen::VectorXd end_values = predictor.predict(ends);
  const double base = end_values(0);
  const double delta = end_values(1) - base;

  if (D == 1) {
    auto e = make_explanation(Method::SHAP, desc.weeks, desc.features, {delta});
    e.base_value = base;
    return e;
  }

  const bool exhaustive = D < 63 && (std::uint64_t{1} << D) - 2 <= config.n_coalitions;
  if (!exhaustive && config.n_coalitions < 2 * D + 2)
    throw ValidationError(fmt::format("kernel_shap: {} coalitions is below the minimum 2D+2 = {}",
                                      config.n_coalitions, 2 * D + 2));

  std::vector<std::vector<std::uint8_t>> masks;
  std::vector<double> kernel;
  const int Di = static_cast<int>(D);

  if (exhaustive) {
    for (std::uint64_t m = 1; m + 1 < (std::uint64_t{1} << D); ++m) {
      std::vector<std::uint8_t> mask(D);
      for (std::size_t d = 0; d < D; ++d) mask[d] = (m >> d) & 1;
      const int s = std::popcount(m);
      masks.push_back(std::move(mask));
      kernel.push_back((Di - 1) / (binomial(Di, s) * s * (Di - s)));
    }
  } else {
    // Total kernel mass per size (pairs s and D-s merged), normalized.
    const int n_sizes = (Di - 1 + 1) / 2;  // ceil((D-1)/2)
    const int n_paired = (Di - 1) / 2;
    std::vector<double> size_weight(static_cast<std::size_t>(n_sizes));
    for (int s = 1; s <= n_sizes; ++s)
      size_weight[static_cast<std::size_t>(s - 1)] = (Di - 1.0) / (s * (Di - s)) * (s <= n_paired ? 2.0 : 1.0);
    double total = 0.0;
    for (double w : size_weight) total += w;
    for (double& w : size_weight) w /= total;

    auto push_mask = [&](std::vector<std::uint8_t> mask, double w) {
      masks.push_back(std::move(mask));
      kernel.push_back(w);
    };

    std::size_t budget = config.n_coalitions;
    int full_sizes = 0;
    std::vector<double> remaining = size_weight;
    for (int s = 1; s <= n_sizes; ++s) {
      const bool paired = s <= n_paired;
      const double n_subsets = binomial(Di, s) * (paired ? 2.0 : 1.0);
      double rest = 0.0;
      for (int t = s; t <= n_sizes; ++t) rest += remaining[static_cast<std::size_t>(t - 1)];
      const double share = remaining[static_cast<std::size_t>(s - 1)] / rest;
      if (static_cast<double>(budget) * share + 1e-8 < n_subsets) break;
      // enumerate every subset of size s (and its complement)
      const double w = size_weight[static_cast<std::size_t>(s - 1)] / n_subsets;
      std::vector<std::uint8_t> mask(D, 0);
      std::fill(mask.end() - s, mask.end(), 1);
      do {
        push_mask(mask, w);
        if (paired) {
          std::vector<std::uint8_t> comp(D);
          for (std::size_t d = 0; d < D; ++d) comp[d] = 1 - mask[d];
          push_mask(std::move(comp), w);
        }
      } while (std::next_permutation(mask.begin(), mask.end()));
      budget -= static_cast<std::size_t>(std::llround(n_subsets));
      ++full_sizes;
    }

    if (full_sizes < n_sizes && budget >= 2) {
      double weight_left = 0.0;
      std::vector<double> dist;
      for (int s = full_sizes + 1; s <= n_sizes; ++s) {
        weight_left += size_weight[static_cast<std::size_t>(s - 1)];
        dist.push_back(size_weight[static_cast<std::size_t>(s - 1)]);
      }
      std::mt19937_64 rng(config.seed);
      std::discrete_distribution<int> pick_size(dist.begin(), dist.end());
      std::vector<std::size_t> perm(D);
      std::map<std::vector<std::uint8_t>, std::size_t> seen;
      const std::size_t first_sampled = masks.size();
      std::size_t draws = 0;
      const std::size_t max_draws = budget * 20;
      auto add_sample = [&](std::vector<std::uint8_t> mask) {
        auto [it, fresh] = seen.try_emplace(mask, masks.size());
        if (fresh) {
          push_mask(std::move(mask), 1.0);
          --budget;
        } else {
          kernel[it->second] += 1.0;
        }
      };
      while (budget >= 2 && draws < max_draws) {
        ++draws;
        const int s = full_sizes + 1 + pick_size(rng);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::uint8_t> mask(D, 0);
        for (int i = 0; i < s; ++i) mask[perm[static_cast<std::size_t>(i)]] = 1;
        std::vector<std::uint8_t> comp(D);
        for (std::size_t d = 0; d < D; ++d) comp[d] = 1 - mask[d];
        add_sample(std::move(mask));
        // the complement of a middle-size subset has the same size, draw it anyway
        add_sample(std::move(comp));
      }
      double sampled_mass = 0.0;
      for (std::size_t i = first_sampled; i < kernel.size(); ++i) sampled_mass += kernel[i];
      for (std::size_t i = first_sampled; i < kernel.size(); ++i) kernel[i] *= weight_left / sampled_mass;
    }
  }

  // Evaluate the value function on every coalition.
  Eigen::MatrixXd X(static_cast<Eigen::Index>(masks.size()), static_cast<Eigen::Index>(D));
  for (std::size_t r = 0; r < masks.size(); ++r) fill_row(X, static_cast<Eigen::Index>(r), masks[r], instance, background);
  const Eigen::VectorXd v = predictor.predict(X);
  if (!v.allFinite() || !std::isfinite(delta)) throw NumericError("kernel_shap: predictor returned non-finite values");

  // Eliminate the last dimension with the efficiency constraint:
  // phi_last = delta - sum(others), regress (v - base - z_last*delta) on (z_j - z_last).
  const auto n = static_cast<Eigen::Index>(masks.size());
  const auto k = static_cast<Eigen::Index>(D - 1);
  Eigen::MatrixXd A(n, k);
  Eigen::VectorXd t(n), w(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& mask = masks[static_cast<std::size_t>(r)];
    const double last = mask[D - 1];
    for (Eigen::Index j = 0; j < k; ++j) A(r, j) = mask[static_cast<std::size_t>(j)] - last;
    t(r) = v(r) - base - last * delta;
    w(r) = kernel[static_cast<std::size_t>(r)];
  }
  const Eigen::MatrixXd Aw = A.array().colwise() * w.array();
  Eigen::MatrixXd normal = Aw.transpose() * A;
  const Eigen::VectorXd rhs = Aw.transpose() * t;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  bool regularized = false;
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-12)) {
    normal.diagonal().array() += 1e-6;
    ldlt.compute(normal);
    regularized = true;
  }
  const Eigen::VectorXd sol = ldlt.solve(rhs);
  if (!sol.allFinite()) throw NumericError("kernel_shap: least-squares solve failed");

  std::vector<double> phi(D);
  double rest = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    phi[static_cast<std::size_t>(j)] = sol(j);
    rest += sol(j);
  }
  phi[D - 1] = delta - rest;

  auto e = make_explanation(Method::SHAP, desc.weeks, desc.features, std::move(phi));
  e.base_value = base;
  e.notes["coalitions"] = std::to_string(masks.size());
  e.notes["exhaustive"] = exhaustive ? "true" : "false";
  if (regularized) e.notes["regularized"] = "1e-6";
  return e;
}

}  // namespace elab
