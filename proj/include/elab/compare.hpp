#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elab/explanation.hpp"

namespace elab {

/// Average-tie ranks of |scores|, rank 1 = largest magnitude.
std::vector<double> magnitude_ranks(std::span<const double> scores);

/// Indices of the k largest |scores|; ties go to the lowest index.
std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k);

/// Pearson correlation of the magnitude ranks. Throws ValidationError when
/// either side has constant magnitudes or lengths differ.
double spearman_rho(std::span<const double> a, std::span<const double> b);

/// |top_k(a) & top_k(b)| / |top_k(a) | top_k(b)|.
double jaccard_topk(std::span<const double> a, std::span<const double> b, std::size_t k = 10);

struct AggregatedRanking {
  std::string course_id;
  Method method = Method::LIME;
  std::vector<std::string> features;
  std::vector<double> scores;  // mean over students of sign * normalized
  std::vector<double> ranks;   // magnitude_ranks(scores)
  int weeks = 0;
  // Per-week profiles (W x F, week-major), averaged over students.
  std::vector<double> week_signed;     // normalized signed raw scores
  std::vector<double> week_magnitude;  // normalized magnitudes
  std::size_t n_students = 0;

  bool operator==(const AggregatedRanking&) const = default;
};

/// Aggregates one course+method explanation set. Each student's explanation
/// is week-aggregated first. Throws ValidationError on an empty set or mixed
/// courses/methods, ShapeError on shape mismatch.
AggregatedRanking aggregate_students(std::span<const Explanation> explanations,
                                     std::span<const std::string> feature_names);

enum class Metric { Spearman, Jaccard };
std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);

struct ComparisonMatrix {
  Metric metric = Metric::Jaccard;
  std::vector<std::string> labels;  // "<method>/<course>"
  std::vector<double> cells;        // row-major n x n

  std::size_t size() const { return labels.size(); }
  double at(std::size_t i, std::size_t j) const { return cells[i * labels.size() + j]; }
};

/// Rankings ordered method-major (LIME, SHAP, Confounder, ExactShapley), then
/// course in input order.
std::vector<AggregatedRanking> order_by_method(std::span<const AggregatedRanking> rankings);

/// Pairwise metric over method-ordered rankings. Throws ValidationError on
/// fewer than two rankings or a feature-universe mismatch.
ComparisonMatrix cross_matrix(std::span<const AggregatedRanking> rankings, Metric metric, std::size_t k = 10);

enum class Period { Beginning, Middle, End, Throughout };
std::string_view period_name(Period p);

/// Thirds split [0,ceil(W/3)), [ceil(W/3),ceil(2W/3)), [ceil(2W/3),W); the
/// period holding at least half of the total mass wins, else Throughout.
Period dominant_period(std::span<const double> week_mass);

struct InsightEntry {
  std::string feature;
  double delta = 0.0;
  Period period = Period::Throughout;
};

struct PairInsight {
  std::string method;
  std::string course_a;
  std::string course_b;
  std::vector<InsightEntry> positive;  // largest delta first
  std::vector<InsightEntry> negative;  // most negative first
  bool zero_change = false;
};

/// delta = b.scores - a.scores. Periods for positive features come from b's
/// magnitude profile, for negative ones from a's. Throws ValidationError on
/// fewer than four features or mismatched universes.
PairInsight pair_insights(const AggregatedRanking& a, const AggregatedRanking& b);

/// Binary Cohen's kappa. Throws ShapeError on length mismatch and
/// ValidationError when chance agreement is 1.
double cohens_kappa(const std::vector<bool>& a, const std::vector<bool>& b);

/// Mean kappa over categories, skipping categories where it is undefined.
/// Throws ValidationError when every category is undefined.
double mean_cohens_kappa(const std::vector<std::vector<bool>>& a, const std::vector<std::vector<bool>>& b);

}  // namespace elab
