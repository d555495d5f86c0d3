#include "elab/logistic.hpp"

#include <cmath>

namespace elab {

Eigen::VectorXd LogisticPredictor::predict_rows(const Eigen::MatrixXd& batch) const {
  Eigen::VectorXd z = batch * weights_;
  z.array() += bias_;
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace elab
