#include "elab/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "elab/error.hpp"
#include "elab/logistic.hpp"
#include "elab/random.hpp"
#include "elab/recurrent.hpp"

namespace elab {

std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::LogisticFlat: return "LogisticFlat";
    case ModelKind::RecurrentNet: return "RecurrentNet";
    case ModelKind::Function: return "Function";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "LogisticFlat") return ModelKind::LogisticFlat;
  if (name == "RecurrentNet") return ModelKind::RecurrentNet;
  if (name == "Function") return ModelKind::Function;
  throw ValidationError(fmt::format("unknown model kind '{}'", name));
}

Eigen::VectorXd Predictor::predict(const Eigen::MatrixXd& batch) const {
  const auto d = descriptor();
  if (batch.rows() == 0) return Eigen::VectorXd(0);
  if (static_cast<std::size_t>(batch.cols()) != d.input_dim())
    throw ShapeError(fmt::format("predict: expected {} columns ({} weeks x {} features), got {}", d.input_dim(),
                                 d.weeks, d.features, batch.cols()));
  return predict_rows(batch);
}

double Predictor::predict_one(std::span<const double> instance) const {
  Eigen::MatrixXd row = Eigen::Map<const Eigen::RowVectorXd>(instance.data(), static_cast<Eigen::Index>(instance.size()));
  return predict(row)(0);
}

Eigen::VectorXd FunctionPredictor::predict_rows(const Eigen::MatrixXd& batch) const {
  Eigen::VectorXd out(batch.rows());
  for (Eigen::Index r = 0; r < batch.rows(); ++r) out(r) = fn_(batch.row(r));
  return out;
}

void TrainConfig::validate() const {
  if (hidden.empty() || std::any_of(hidden.begin(), hidden.end(), [](int h) { return h <= 0; }))
    throw ValidationError("train config: hidden sizes must be positive");
  if (!(learning_rate > 0)) throw ValidationError("train config: learning rate must be positive");
  if (max_epochs <= 0 || patience <= 0 || batch_size <= 0)
    throw ValidationError("train config: epochs, patience and batch size must be positive");
  if (!(l2 >= 0)) throw ValidationError("train config: l2 must be non-negative");
  if (!(validation_fraction > 0 && validation_fraction < 1))
    throw ValidationError("train config: validation fraction must lie in (0, 1)");
  if (kind == ModelKind::Function) throw ValidationError("train config: Function models cannot be trained");
}

Split stratified_split(std::span<const StudentLabel> labels, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ValidationError("split: train_fraction must lie in (0, 1)");
  std::vector<std::string> classes[2];
  for (const auto& l : labels) classes[l.passed ? 1 : 0].push_back(l.student_id);
  Split split;
  std::mt19937_64 rng(substream_seed(spec.seed, "stratified-split"));
  for (auto& members : classes) {
    if (members.size() < 2) throw ValidationError("split: each class needs at least two students");
    std::sort(members.begin(), members.end());
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(members.size())));
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Eigen::MatrixXd design_rows(const FeatureMatrix& matrix, std::span<const std::string> ids) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(matrix.width()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto s = matrix.student_index(ids[i]);
    if (!s) throw ValidationError(fmt::format("student '{}' not in feature matrix", ids[i]));
    const auto row = matrix.row(*s);
    for (std::size_t d = 0; d < row.size(); ++d) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = row[d];
  }
  return X;
}

Eigen::MatrixXd design_rows(const FeatureMatrix& matrix) { return design_rows(matrix, matrix.students); }

Eigen::VectorXd target_vector(std::span<const StudentLabel> labels, std::span<const std::string> ids) {
  std::map<std::string, bool> passed;
  for (const auto& l : labels) passed[l.student_id] = l.passed;
  Eigen::VectorXd y(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = passed.find(ids[i]);
    if (it == passed.end()) throw ValidationError(fmt::format("student '{}' has no label", ids[i]));
    y(static_cast<Eigen::Index>(i)) = it->second ? 1.0 : 0.0;
  }
  return y;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double mean_bce(const Eigen::VectorXd& p, const Eigen::VectorXd& y) {
  constexpr double eps = 1e-12;
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    total -= y(i) * std::log(std::max(p(i), eps)) + (1 - y(i)) * std::log(std::max(1 - p(i), eps));
  return total / static_cast<double>(p.size());
}

// Adapter giving the optimizer a uniform view of both model kinds.
class Trainable {
 public:
  virtual ~Trainable() = default;
  virtual std::vector<Eigen::MatrixXd*> params() = 0;
  virtual double loss_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   std::vector<Eigen::MatrixXd>& grads) = 0;
  virtual Eigen::VectorXd probabilities(const Eigen::MatrixXd& X) = 0;
};

class LogisticTrainable final : public Trainable {
 public:
  explicit LogisticTrainable(Eigen::Index dims) : w_(Eigen::MatrixXd::Zero(dims, 1)), b_(Eigen::MatrixXd::Zero(1, 1)) {}

  std::vector<Eigen::MatrixXd*> params() override { return {&w_, &b_}; }

  double loss_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           std::vector<Eigen::MatrixXd>& grads) override {
    const Eigen::VectorXd p = probabilities(X);
    const Eigen::VectorXd r = (p - y) / static_cast<double>(X.rows());
    grads[0] = X.transpose() * r;
    grads[1](0, 0) = r.sum();
    return mean_bce(p, y);
  }

  Eigen::VectorXd probabilities(const Eigen::MatrixXd& X) override {
    Eigen::VectorXd z = X * w_.col(0);
    z.array() += b_(0, 0);
    return z.unaryExpr([](double v) { return sigmoid(v); });
  }

  const Eigen::MatrixXd& w() const { return w_; }
  double b() const { return b_(0, 0); }

 private:
  Eigen::MatrixXd w_, b_;
};

class RecurrentTrainable final : public Trainable {
 public:
  explicit RecurrentTrainable(BiLstmNetwork net) : net_(std::move(net)), grad_(net_.zeros_like()) {}

  std::vector<Eigen::MatrixXd*> params() override { return net_.tensors(); }

  double loss_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           std::vector<Eigen::MatrixXd>& grads) override {
    const double loss = net_.loss_and_gradient(X, y, grad_);
    auto g = grad_.tensors();
    for (std::size_t i = 0; i < g.size(); ++i) grads[i] = *g[i];
    return loss;
  }

  Eigen::VectorXd probabilities(const Eigen::MatrixXd& X) override { return net_.forward(X); }

  const BiLstmNetwork& net() const { return net_; }

 private:
  BiLstmNetwork net_;
  BiLstmNetwork grad_;
};

TrainReport fit(Trainable& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TrainConfig& config) {
  const auto n = static_cast<std::size_t>(X.rows());
  std::mt19937_64 rng(substream_seed(config.seed, "train"));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(n))), 1, n - 1);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> fit_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  auto gather = [&](const std::vector<std::size_t>& idx, Eigen::MatrixXd& Xo, Eigen::VectorXd& yo) {
    Xo.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    yo.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      Xo.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
      yo(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(idx[i]));
    }
  };
  Eigen::MatrixXd Xval;
  Eigen::VectorXd yval;
  gather(val_idx, Xval, yval);

  auto params = model.params();
  std::vector<Eigen::MatrixXd> grads, m, v, best;
  for (auto* p : params) {
    grads.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    m.push_back(grads.back());
    v.push_back(grads.back());
    best.push_back(*p);
  }

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
  long step = 0;
  TrainReport report;
  report.best_validation_loss = mean_bce(model.probabilities(Xval), yval);
  int since_best = 0;
  Eigen::MatrixXd Xb;
  Eigen::VectorXd yb;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(fit_idx.begin(), fit_idx.end(), rng);
    for (std::size_t start = 0; start < fit_idx.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(fit_idx.size(), start + static_cast<std::size_t>(config.batch_size));
      gather(std::vector<std::size_t>(fit_idx.begin() + static_cast<std::ptrdiff_t>(start),
                                      fit_idx.begin() + static_cast<std::ptrdiff_t>(end)),
             Xb, yb);
      model.loss_and_gradient(Xb, yb, grads);
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < params.size(); ++k) {
        Eigen::MatrixXd g = grads[k] + config.l2 * *params[k];
        m[k] = beta1 * m[k] + (1 - beta1) * g;
        v[k] = beta2 * v[k] + (1 - beta2) * g.cwiseProduct(g);
        params[k]->array() -= config.learning_rate * (m[k].array() / c1) / ((v[k].array() / c2).sqrt() + eps);
      }
    }
    report.epochs_run = epoch;
    const double val_loss = mean_bce(model.probabilities(Xval), yval);
    if (val_loss < report.best_validation_loss) {
      report.best_validation_loss = val_loss;
      report.best_epoch = epoch;
      for (std::size_t k = 0; k < params.size(); ++k) best[k] = *params[k];
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) *params[k] = best[k];
  return report;
}

}  // namespace

PredictorPtr train(const FeatureMatrix& matrix, std::span<const StudentLabel> labels,
                   std::span<const std::string> train_ids, const TrainConfig& config, TrainReport* report) {
  config.validate();
  const Eigen::MatrixXd X = design_rows(matrix, train_ids);
  const Eigen::VectorXd y = target_vector(labels, train_ids);
  if (y.size() < 2 || y.minCoeff() == y.maxCoeff())
    throw ValidationError("train: training set must contain both classes");
  if (!X.allFinite()) throw NumericError("train: feature matrix contains non-finite values");

  TrainReport local;
  if (config.kind == ModelKind::LogisticFlat) {
    LogisticTrainable model(X.cols());
    local = fit(model, X, y, config);
    if (report) *report = local;
    return std::make_shared<LogisticPredictor>(matrix.weeks, static_cast<int>(matrix.n_features()), model.w().col(0),
                                               model.b(), config.seed);
  }
  RecurrentTrainable model(BiLstmNetwork(matrix.weeks, static_cast<int>(matrix.n_features()), config.hidden,
                                         substream_seed(config.seed, "init")));
  local = fit(model, X, y, config);
  if (report) *report = local;
  return std::make_shared<RecurrentPredictor>(model.net(), config.seed);
}

double balanced_accuracy(std::span<const double> probabilities, const std::vector<bool>& labels, double threshold) {
  if (probabilities.size() != labels.size()) throw ShapeError("balanced_accuracy: length mismatch");
  std::size_t pos = 0, neg = 0, tp = 0, tn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = probabilities[i] >= threshold;
    if (labels[i]) {
      ++pos;
      tp += predicted ? 1 : 0;
    } else {
      ++neg;
      tn += predicted ? 0 : 1;
    }
  }
  if (pos == 0 || neg == 0) throw ValidationError("balanced_accuracy: both classes must be present");
  // single rounding: (tp/pos + tn/neg) / 2 over a common denominator
  return static_cast<double>(tp * neg + tn * pos) / static_cast<double>(2 * pos * neg);
}

}  // namespace elab
