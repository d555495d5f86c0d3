#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "elab/checkpoint.hpp"
#include "elab/error.hpp"
#include "elab/logistic.hpp"
#include "elab/model.hpp"
#include "elab/recurrent.hpp"
#include "test_util.hpp"

using namespace elab;

namespace {

std::vector<StudentLabel> make_labels(int pass, int fail) {
  std::vector<StudentLabel> out;
  for (int i = 0; i < pass; ++i) out.push_back({"p" + std::to_string(i), true});
  for (int i = 0; i < fail; ++i) out.push_back({"f" + std::to_string(i), false});
  return out;
}

// Two-week, two-feature matrix where passing students sit high on feature 0.
FeatureMatrix toy_matrix(const std::vector<StudentLabel>& labels, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& l : labels) ids.push_back(l.student_id);
  FeatureMatrix m(ids, 2, {"x", "y"});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 0.4);
  for (std::size_t s = 0; s < labels.size(); ++s)
    for (std::size_t w = 0; w < 2; ++w) {
      m.at(s, w, 0) = (labels[s].passed ? 0.6 : 0.0) + u(rng);
      m.at(s, w, 1) = u(rng);
    }
  return m;
}

}  // namespace

TEST(Split, PerClassRounding) {
  const auto labels = make_labels(5, 5);
  const auto split = stratified_split(labels, {0.8, 3});
  auto count_pass = [](const std::vector<std::string>& ids) {
    return std::count_if(ids.begin(), ids.end(), [](const std::string& s) { return s[0] == 'p'; });
  };
  EXPECT_EQ(split.train.size(), 8u);
  EXPECT_EQ(split.test.size(), 2u);
  EXPECT_EQ(count_pass(split.train), 4);
  EXPECT_EQ(count_pass(split.test), 1);
}

TEST(Split, EightyTwentyAndDeterminism) {
  const auto labels = make_labels(60, 40);
  const auto a = stratified_split(labels, {0.8, 9});
  const auto b = stratified_split(labels, {0.8, 9});
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.train.size(), 80u);
  EXPECT_EQ(a.test.size(), 20u);
  std::vector<std::string> all(a.train);
  all.insert(all.end(), a.test.begin(), a.test.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());
}

TEST(Split, RejectsTinyClass) { EXPECT_THROW(stratified_split(make_labels(5, 1), {0.8, 0}), ValidationError); }

TEST(BalancedAccuracy, HandCases) {
  std::vector<double> p{0.9, 0.8, 0.1, 0.2};
  std::vector<bool> y{true, true, false, false};
  EXPECT_EQ(balanced_accuracy(p, y), 1.0);
  std::vector<double> always(4, 0.9);
  EXPECT_EQ(balanced_accuracy(always, y), 0.5);

  std::vector<double> probs;
  std::vector<bool> labels;
  for (int i = 0; i < 50; ++i) {
    probs.push_back(i < 40 ? 0.9 : 0.1);
    labels.push_back(true);
  }
  for (int i = 0; i < 50; ++i) {
    probs.push_back(i < 30 ? 0.1 : 0.9);
    labels.push_back(false);
  }
  EXPECT_EQ(balanced_accuracy(probs, labels), 0.7);
}

TEST(BalancedAccuracy, ComplementProperty) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p, q;
    std::vector<bool> y;
    for (int i = 0; i < 30; ++i) {
      p.push_back(u(rng));
      y.push_back(i % 3 == 0);
      // Strictly flips every hard decision at threshold 0.5.
      q.push_back(p.back() >= 0.5 ? 0.25 : 0.75);
    }
    EXPECT_NEAR(balanced_accuracy(p, y) + balanced_accuracy(q, y), 1.0, 1e-12);
  }
}

TEST(Predictor, EmptyBatchAndDuplicatedRows) {
  BiLstmNetwork net(3, 2, {4}, 1);
  RecurrentPredictor model(net, 1);
  EXPECT_EQ(model.predict(Eigen::MatrixXd(0, 6)).size(), 0);
  Eigen::MatrixXd batch(3, 6);
  batch.row(0).setConstant(0.3);
  batch.row(1).setConstant(0.3);
  batch.row(2).setConstant(0.9);
  const auto p = model.predict(batch);
  EXPECT_EQ(p(0), p(1));
  EXPECT_THROW(model.predict(Eigen::MatrixXd(2, 5)), ShapeError);
}

TEST(Predictor, OutputsInUnitInterval) {
  BiLstmNetwork net(4, 3, {8, 6}, 2);
  RecurrentPredictor model(net, 2);
  const Eigen::MatrixXd batch = Eigen::MatrixXd::Random(64, 12) * 5.0;
  const auto p = model.predict(batch);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    EXPECT_TRUE(std::isfinite(p(i)));
    EXPECT_GE(p(i), 0.0);
    EXPECT_LE(p(i), 1.0);
  }
}

double max_gradient_error(const std::vector<int>& hidden, std::uint64_t seed) {
  BiLstmNetwork net(2, 2, hidden, seed);
  std::mt19937_64 rng(seed + 100);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd batch(3, 4);
  for (Eigen::Index i = 0; i < batch.size(); ++i) batch.data()[i] = u(rng);
  Eigen::VectorXd y(3);
  y << 1, 0, 1;
  auto grad = net.zeros_like();
  net.loss_and_gradient(batch, y, grad);
  auto scratch = net.zeros_like();
  auto params = net.tensors();
  auto grads = grad.tensors();
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (Eigen::Index i = 0; i < params[t]->size(); ++i) {
      double& w = params[t]->data()[i];
      const double keep = w;
      w = keep + h;
      const double up = net.loss_and_gradient(batch, y, scratch);
      w = keep - h;
      const double down = net.loss_and_gradient(batch, y, scratch);
      w = keep;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[t]->data()[i];
      const double scale = std::abs(numeric) + std::abs(analytic);
      if (scale < 1e-7) continue;
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  }
  return worst;
}

TEST(Recurrent, GradientsMatchFiniteDifferences) {
  EXPECT_LT(max_gradient_error({2}, 11), 1e-4);
  EXPECT_LT(max_gradient_error({2, 3}, 12), 1e-4);
}

TEST(Train, RejectsSingleClass) {
  const auto labels = make_labels(6, 0);
  const auto m = toy_matrix(labels, 1);
  std::vector<std::string> ids;
  for (const auto& l : labels) ids.push_back(l.student_id);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  EXPECT_THROW(train(m, labels, ids, cfg), ValidationError);
}

TEST(Train, RecurrentLearnsToyTaskDeterministically) {
  const auto labels = make_labels(40, 40);
  const auto m = toy_matrix(labels, 2);
  std::vector<std::string> ids;
  for (const auto& l : labels) ids.push_back(l.student_id);
  TrainConfig cfg;
  cfg.hidden = {8};
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 60;
  cfg.seed = 5;
  TrainReport report;
  const auto a = train(m, labels, ids, cfg, &report);
  const auto b = train(m, labels, ids, cfg);
  const auto X = design_rows(m);
  const Eigen::VectorXd pa = a->predict(X);
  const Eigen::VectorXd pb = b->predict(X);
  EXPECT_EQ(pa, pb);
  std::vector<double> p(pa.data(), pa.data() + pa.size());
  std::vector<bool> y;
  for (const auto& l : labels) y.push_back(l.passed);
  EXPECT_GE(balanced_accuracy(p, y), 0.9);
  EXPECT_GT(report.epochs_run, 0);
  EXPECT_LE(report.best_epoch, report.epochs_run);
}

TEST(Train, LogisticSeparatesToyTask) {
  const auto labels = make_labels(30, 30);
  const auto m = toy_matrix(labels, 3);
  std::vector<std::string> ids;
  for (const auto& l : labels) ids.push_back(l.student_id);
  TrainConfig cfg;
  cfg.kind = ModelKind::LogisticFlat;
  cfg.learning_rate = 0.05;
  cfg.max_epochs = 200;
  const auto model = train(m, labels, ids, cfg);
  const auto* logistic = dynamic_cast<const LogisticPredictor*>(model.get());
  ASSERT_NE(logistic, nullptr);
  // Week-major layout: feature 0 sits at dims 0 and 2.
  EXPECT_GT(logistic->weights()(0), std::abs(logistic->weights()(1)));
  EXPECT_GT(logistic->weights()(2), std::abs(logistic->weights()(3)));
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  const auto dir = elab::test::temp_dir("checkpoint");
  BiLstmNetwork net(3, 2, {4, 5}, 8);
  RecurrentPredictor model(net, 8);
  save_predictor(dir / "model.json", model);
  const auto back = load_predictor(dir / "model.json");
  const Eigen::MatrixXd batch = Eigen::MatrixXd::Random(5, 6);
  EXPECT_EQ(model.predict(batch), back->predict(batch));
  EXPECT_EQ(back->descriptor().kind, ModelKind::RecurrentNet);
  EXPECT_EQ(back->descriptor().seed, 8u);

  Eigen::VectorXd w(4);
  w << 1, -2, 0.5, 0.25;
  LogisticPredictor lr(2, 2, w, 0.1, 3);
  const auto lr_back = predictor_from_json(predictor_to_json(lr));
  EXPECT_EQ(lr.predict(batch.leftCols(4)), lr_back->predict(batch.leftCols(4)));
  EXPECT_THROW(load_predictor(dir / "absent.json"), MissingInputError);
}
