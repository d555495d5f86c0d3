#include "elab/lime.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "elab/error.hpp"

namespace elab {

void LimeConfig::validate() const {
  if (n_features < 1) throw ValidationError("lime: n_features must be at least 1");
  if (n_samples < 10 * n_features) throw ValidationError("lime: n_samples must be at least 10 * n_features");
  if (kernel_width && !(*kernel_width > 0)) throw ValidationError("lime: kernel width must be positive");
  if (!(ridge >= 0)) throw ValidationError("lime: ridge penalty must be non-negative");
}

namespace {

// Weighted ridge with an unpenalized intercept over the given columns of Z.
Eigen::VectorXd weighted_ridge(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                               const std::vector<Eigen::Index>& cols, double lambda) {
  const auto k = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd A(Z.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) A.col(j) = Z.col(cols[static_cast<std::size_t>(j)]);
  const double sw = w.sum();
  const Eigen::RowVectorXd a_mean = (w.transpose() * A) / sw;
  const double y_mean = w.dot(y) / sw;
  A.rowwise() -= a_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  const Eigen::MatrixXd Aw = A.array().colwise() * w.array();
  Eigen::MatrixXd normal = Aw.transpose() * A;
  normal.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = Aw.transpose() * yc;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw NumericError("lime: surrogate system is singular");
  return ldlt.solve(rhs);
}

}  // namespace

Explanation lime_explain(const Predictor& predictor, std::span<const double> instance,
                         const Background& background, const LimeConfig& config) {
  config.validate();
  const auto desc = predictor.descriptor();
  const std::size_t D = instance.size();
  if (D != desc.input_dim() || background.dims() != D)
    throw ShapeError(fmt::format("lime: instance has {} dims, model expects {}, background {}", D, desc.input_dim(),
                                 background.dims()));

  std::vector<Eigen::Index> active;
  for (std::size_t d = 0; d < D; ++d)
    if (background.std[d] > 0) active.push_back(static_cast<Eigen::Index>(d));

  const Eigen::Index n = config.n_samples;
  const double width = config.kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(D)));
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(D));
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(D));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index d : active) Z(r, d) = normal(rng);
    for (std::size_t d = 0; d < D; ++d) {
      const auto c = static_cast<Eigen::Index>(d);
      X(r, c) = instance[d] + Z(r, c) * background.std[d];
    }
  }
  const Eigen::VectorXd weights = (-Z.rowwise().squaredNorm().array() / (width * width)).exp().matrix();
  if (!(weights.sum() > 0)) throw NumericError("lime: all sample weights are zero (kernel width too small)");

  const Eigen::VectorXd y = predictor.predict(X);
  if (!y.allFinite()) throw NumericError("lime: predictor returned non-finite values");

  std::vector<double> raw(D, 0.0);
  if (!active.empty()) {
    const Eigen::VectorXd full = weighted_ridge(Z, y, weights, active, config.ridge);
    std::vector<std::size_t> order(active.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(full(static_cast<Eigen::Index>(a))) >
                                                                std::abs(full(static_cast<Eigen::Index>(b))); });
    const std::size_t k = std::min(static_cast<std::size_t>(config.n_features), active.size());
    std::vector<Eigen::Index> selected;
    for (std::size_t i = 0; i < k; ++i) selected.push_back(active[order[i]]);
    std::sort(selected.begin(), selected.end());
    const Eigen::VectorXd refit = weighted_ridge(Z, y, weights, selected, config.ridge);
    for (std::size_t i = 0; i < selected.size(); ++i)
      raw[static_cast<std::size_t>(selected[i])] = refit(static_cast<Eigen::Index>(i));
  }
  auto e = make_explanation(Method::LIME, desc.weeks, desc.features, std::move(raw));
  e.notes["kernel_width"] = fmt::format("{}", width);
  return e;
}

}  // namespace elab
