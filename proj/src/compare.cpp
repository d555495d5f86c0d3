#include "elab/compare.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "elab/error.hpp"

namespace elab {

std::vector<double> magnitude_ranks(std::span<const double> scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return std::abs(scores[i]) > std::abs(scores[j]); });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(scores[order[j + 1]]) == std::abs(scores[order[i]])) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k) {
  if (k < 1 || k > scores.size())
    throw ValidationError(fmt::format("top_k: k = {} outside [1, {}]", k, scores.size()));
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return std::abs(scores[i]) > std::abs(scores[j]); });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw ValidationError(fmt::format("spearman_rho: need equal lengths >= 2, got {} and {}", a.size(), b.size()));
  const auto ra = magnitude_ranks(a);
  const auto rb = magnitude_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean, db = rb[i] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw ValidationError("spearman_rho: constant magnitudes, correlation undefined");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double jaccard_topk(std::span<const double> a, std::span<const double> b, std::size_t k) {
  if (a.size() != b.size()) throw ValidationError("jaccard_topk: length mismatch");
  const auto ta = top_k(a, k);
  const auto tb = top_k(b, k);
  std::vector<std::size_t> inter;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(inter));
  const double uni = static_cast<double>(2 * k - inter.size());
  return static_cast<double>(inter.size()) / uni;
}

AggregatedRanking aggregate_students(std::span<const Explanation> explanations,
                                     std::span<const std::string> feature_names) {
  if (explanations.empty()) throw ValidationError("aggregate_students: no explanations");
  const auto& first = explanations.front();
  const int W = first.weeks;
  const int F = static_cast<int>(feature_names.size());
  if (first.features != F) throw ShapeError("aggregate_students: feature count mismatch");

  AggregatedRanking r;
  r.course_id = first.course_id;
  r.method = first.method;
  r.features.assign(feature_names.begin(), feature_names.end());
  r.weeks = W;
  r.scores.assign(static_cast<std::size_t>(F), 0.0);
  r.week_signed.assign(static_cast<std::size_t>(W * F), 0.0);
  r.week_magnitude.assign(static_cast<std::size_t>(W * F), 0.0);

  // Sum in student-id order so the result does not depend on input order.
  std::vector<std::size_t> order(explanations.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return explanations[i].student_id < explanations[j].student_id;
  });
  for (std::size_t idx : order) {
    const auto& e = explanations[idx];
    if (e.method != r.method || e.course_id != r.course_id)
      throw ValidationError(fmt::format("aggregate_students: mixed sets ({}/{} vs {}/{})", method_name(r.method),
                                        r.course_id, method_name(e.method), e.course_id));
    if (e.weeks != W || e.features != F) throw ShapeError("aggregate_students: shape mismatch");
    const auto a = aggregate_weeks(e, W, F);
    const auto sn = a.signed_normalized();
    for (std::size_t f = 0; f < sn.size(); ++f) r.scores[f] += sn[f];
    for (std::size_t i = 0; i < r.week_signed.size(); ++i) {
      r.week_signed[i] += e.signs[i] * e.normalized[i];
      r.week_magnitude[i] += e.normalized[i];
    }
  }
  const double n = static_cast<double>(explanations.size());
  for (auto& v : r.scores) v /= n;
  for (auto& v : r.week_signed) v /= n;
  for (auto& v : r.week_magnitude) v /= n;
  r.ranks = magnitude_ranks(r.scores);
  r.n_students = explanations.size();
  return r;
}

std::string_view metric_name(Metric m) { return m == Metric::Spearman ? "spearman" : "jaccard"; }

Metric parse_metric(std::string_view name) {
  if (name == "spearman") return Metric::Spearman;
  if (name == "jaccard") return Metric::Jaccard;
  throw ValidationError(fmt::format("unknown metric '{}'", name));
}

std::vector<AggregatedRanking> order_by_method(std::span<const AggregatedRanking> rankings) {
  std::vector<AggregatedRanking> out(rankings.begin(), rankings.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return static_cast<int>(x.method) < static_cast<int>(y.method);
  });
  return out;
}

ComparisonMatrix cross_matrix(std::span<const AggregatedRanking> rankings, Metric metric, std::size_t k) {
  if (rankings.size() < 2) throw ValidationError("cross_matrix: need at least two rankings");
  const auto ordered = order_by_method(rankings);
  for (const auto& r : ordered)
    if (r.features != ordered.front().features) throw ValidationError("cross_matrix: feature universe mismatch");
  ComparisonMatrix m;
  m.metric = metric;
  const std::size_t n = ordered.size();
  for (const auto& r : ordered) m.labels.push_back(fmt::format("{}/{}", method_name(r.method), r.course_id));
  m.cells.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.cells[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = metric == Metric::Spearman ? spearman_rho(ordered[i].scores, ordered[j].scores)
                                                  : jaccard_topk(ordered[i].scores, ordered[j].scores, k);
      m.cells[i * n + j] = v;
      m.cells[j * n + i] = v;
    }
  }
  return m;
}

std::string_view period_name(Period p) {
  switch (p) {
    case Period::Beginning: return "beginning";
    case Period::Middle: return "middle";
    case Period::End: return "end";
    case Period::Throughout: return "throughout";
  }
  return "throughout";
}

Period dominant_period(std::span<const double> week_mass) {
  const std::size_t W = week_mass.size();
  if (W == 0) return Period::Throughout;
  const std::size_t b1 = (W + 2) / 3;
  const std::size_t b2 = (2 * W + 2) / 3;
  double mass[3] = {0, 0, 0};
  double total = 0;
  for (std::size_t w = 0; w < W; ++w) {
    const double v = std::abs(week_mass[w]);
    mass[w < b1 ? 0 : (w < b2 ? 1 : 2)] += v;
    total += v;
  }
  if (total <= 0) return Period::Throughout;
  for (int p = 0; p < 3; ++p)
    if (mass[p] >= 0.5 * total) return static_cast<Period>(p);
  return Period::Throughout;
}

PairInsight pair_insights(const AggregatedRanking& a, const AggregatedRanking& b) {
  if (a.features != b.features) throw ValidationError("pair_insights: feature universe mismatch");
  const std::size_t F = a.features.size();
  if (F < 4) throw ValidationError("pair_insights: need at least four features");

  std::vector<double> delta(F);
  bool all_zero = true;
  for (std::size_t f = 0; f < F; ++f) {
    delta[f] = b.scores[f] - a.scores[f];
    if (delta[f] != 0.0) all_zero = false;
  }
  std::vector<std::size_t> order(F);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return delta[i] > delta[j]; });
  std::vector<std::size_t> asc(F);
  std::iota(asc.begin(), asc.end(), 0);
  std::stable_sort(asc.begin(), asc.end(), [&](std::size_t i, std::size_t j) { return delta[i] < delta[j]; });

  auto profile = [&](const AggregatedRanking& r, std::size_t f) {
    std::vector<double> mass(static_cast<std::size_t>(r.weeks));
    for (int w = 0; w < r.weeks; ++w) mass[static_cast<std::size_t>(w)] = r.week_magnitude[static_cast<std::size_t>(w) * F + f];
    return dominant_period(mass);
  };

  PairInsight out;
  out.method = std::string(method_name(a.method));
  out.course_a = a.course_id;
  out.course_b = b.course_id;
  out.zero_change = all_zero;
  for (std::size_t i = 0; i < 2; ++i)
    out.positive.push_back({a.features[order[i]], delta[order[i]], profile(b, order[i])});
  for (std::size_t i = 0; i < 2; ++i)
    out.negative.push_back({a.features[asc[i]], delta[asc[i]], profile(a, asc[i])});
  return out;
}

double cohens_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("cohens_kappa: need equal non-empty vectors");
  const double n = static_cast<double>(a.size());
  double agree = 0, pa = 0, pb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i];
    pa += a[i];
    pb += b[i];
  }
  const double po = agree / n;
  pa /= n;
  pb /= n;
  const double pe = pa * pb + (1 - pa) * (1 - pb);
  if (pe >= 1.0) throw ValidationError("cohens_kappa: chance agreement is 1, kappa undefined");
  return (po - pe) / (1 - pe);
}

double mean_cohens_kappa(const std::vector<std::vector<bool>>& a, const std::vector<std::vector<bool>>& b) {
  if (a.size() != b.size()) throw ShapeError("mean_cohens_kappa: category count mismatch");
  double sum = 0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    try {
      sum += cohens_kappa(a[c], b[c]);
      ++used;
    } catch (const ValidationError&) {
    }
  }
  if (used == 0) throw ValidationError("mean_cohens_kappa: kappa undefined for every category");
  return sum / static_cast<double>(used);
}

}  // namespace elab
