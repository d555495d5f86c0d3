#include "elab/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "elab/error.hpp"

namespace elab {

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Rgb {
  int r, g, b;
};

// Linear blend from white toward `to` by t in [0, 1].
std::string tint(Rgb to, double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto mix = [t](int c) { return static_cast<int>(std::lround(255.0 + (c - 255.0) * t)); };
  return fmt::format("#{:02x}{:02x}{:02x}", mix(to.r), mix(to.g), mix(to.b));
}

constexpr Rgb kPositive{26, 152, 80};
constexpr Rgb kNegative{215, 48, 39};
constexpr Rgb kBlue{49, 54, 149};

std::string method_of(const std::string& label) { return label.substr(0, label.find('/')); }

}  // namespace

std::vector<std::size_t> heatmap_rows(std::span<const AggregatedRanking> rankings) {
  std::set<std::size_t> rows;
  for (const auto& r : rankings) {
    std::size_t best_pos = r.scores.size(), best_neg = r.scores.size();
    for (std::size_t f = 0; f < r.scores.size(); ++f) {
      if (r.scores[f] > 0 && (best_pos == r.scores.size() || r.scores[f] > r.scores[best_pos])) best_pos = f;
      if (r.scores[f] < 0 && (best_neg == r.scores.size() || r.scores[f] < r.scores[best_neg])) best_neg = f;
    }
    if (best_pos < r.scores.size()) rows.insert(best_pos);
    if (best_neg < r.scores.size()) rows.insert(best_neg);
  }
  return {rows.begin(), rows.end()};
}

HeatmapSvg heatmap_svg(std::span<const AggregatedRanking> rankings, std::span<const std::size_t> rows,
                       double threshold) {
  if (rankings.empty()) throw ValidationError("heatmap: no rankings");
  const auto& features = rankings.front().features;
  constexpr int cell = 16, label_w = 230, top = 56, gap = 24, legend_h = 40;

  double vmax = 0.0;
  for (const auto& r : rankings)
    for (std::size_t f : rows)
      for (int w = 0; w < r.weeks; ++w) {
        const double v = r.week_signed[static_cast<std::size_t>(w) * r.features.size() + f];
        if (std::abs(v) >= threshold) vmax = std::max(vmax, std::abs(v));
      }

  int width = label_w;
  for (const auto& r : rankings) width += std::max(r.weeks * cell, 90) + gap;
  const int height = top + static_cast<int>(rows.size()) * cell + legend_h + 20;

  std::ostringstream out;
  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height, width, height);
  out << fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", width, height);

  for (std::size_t i = 0; i < rows.size(); ++i)
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", label_w - 6,
                       top + static_cast<int>(i) * cell + cell - 4, xml_escape(features[rows[i]]));

  bool any = false;
  int x0 = label_w;
  for (const auto& r : rankings) {
    const int pw = std::max(r.weeks * cell, 90);
    out << fmt::format("<text x=\"{}\" y=\"{}\" font-weight=\"bold\">{}</text>\n", x0, top - 30,
                       xml_escape(method_name(r.method)));
    out << fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", x0, top - 16, xml_escape(r.course_id));
    for (int w = 0; w < r.weeks; ++w)
      out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"8\">{}</text>\n",
                         x0 + w * cell + cell / 2, top - 3, w + 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (int w = 0; w < r.weeks; ++w) {
        const double v = r.week_signed[static_cast<std::size_t>(w) * r.features.size() + rows[i]];
        const int x = x0 + w * cell, y = top + static_cast<int>(i) * cell;
        if (std::abs(v) < threshold) {
          out << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#eeeeee\"/>\n",
                             x, y, cell, cell);
          continue;
        }
        any = true;
        const std::string color = tint(v > 0 ? kPositive : kNegative, 0.15 + 0.85 * std::abs(v) / vmax);
        out << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\">"
                           "<title>{:.4f}</title></rect>\n",
                           x, y, cell, cell, color, v);
      }
    }
    x0 += pw + gap;
  }

  const int ly = top + static_cast<int>(rows.size()) * cell + 14;
  out << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", label_w, ly,
                     tint(kPositive, 1.0));
  out << fmt::format("<text x=\"{}\" y=\"{}\">toward pass</text>\n", label_w + 16, ly + 10);
  out << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", label_w + 110, ly,
                     tint(kNegative, 1.0));
  out << fmt::format("<text x=\"{}\" y=\"{}\">toward fail</text>\n", label_w + 126, ly + 10);
  out << fmt::format("<text x=\"{}\" y=\"{}\">blank: |score| &lt; {}</text>\n", label_w + 220, ly + 10, threshold);
  out << "</svg>\n";
  return {out.str(), !any};
}

std::string matrix_svg(const ComparisonMatrix& m) {
  const int n = static_cast<int>(m.size());
  constexpr int cell = 44, label_w = 170, top = 170;
  const int width = label_w + n * cell + 20, height = top + n * cell + 40;
  const bool diverging = m.metric == Metric::Spearman;

  std::ostringstream out;
  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height, width, height);
  out << fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", width, height);
  out << fmt::format("<text x=\"10\" y=\"18\" font-weight=\"bold\">{}</text>\n",
                     diverging ? "Spearman rank correlation" : "Jaccard similarity of top-k sets");
  for (int i = 0; i < n; ++i) {
    const auto label = xml_escape(m.labels[static_cast<std::size_t>(i)]);
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", label_w - 6,
                       top + i * cell + cell / 2 + 4, label);
    const int cx = label_w + i * cell + cell / 2;
    out << fmt::format("<text x=\"{}\" y=\"{}\" transform=\"rotate(-60 {} {})\">{}</text>\n", cx, top - 6, cx,
                       top - 6, label);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = m.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      const std::string color = diverging ? tint(v >= 0 ? kBlue : kNegative, std::abs(v)) : tint(kBlue, v);
      const int x = label_w + j * cell, y = top + i * cell;
      out << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\"/>\n", x, y,
                         cell, cell, color);
      out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{}\">{:.2f}</text>\n", x + cell / 2,
                         y + cell / 2 + 4, std::abs(v) > 0.6 ? "#ffffff" : "#000000", v);
    }
  out << "</svg>\n";
  return out.str();
}

std::pair<double, double> within_cross_means(const ComparisonMatrix& m) {
  double within = 0, cross = 0;
  std::size_t nw = 0, nc = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      if (method_of(m.labels[i]) == method_of(m.labels[j])) {
        within += m.at(i, j);
        ++nw;
      } else {
        cross += m.at(i, j);
        ++nc;
      }
    }
  return {nw ? within / static_cast<double>(nw) : std::nan(""), nc ? cross / static_cast<double>(nc) : std::nan("")};
}

std::string summary_text(std::span<const std::pair<std::string, double>> bac,
                         std::span<const AggregatedRanking> rankings, std::span<const ComparisonMatrix> matrices,
                         const nlohmann::json& insights, std::span<const std::string> warnings) {
  std::ostringstream out;
  out << "Model balanced accuracy (test split)\n";
  for (const auto& [id, v] : bac) out << fmt::format("  {:<24} {:.4f}\n", id, v);

  out << "\nTop features per method and course (mean signed score)\n";
  for (const auto& r : rankings) {
    std::vector<std::size_t> order(r.scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(r.scores[a]) > std::abs(r.scores[b]); });
    std::size_t nonzero = 0;
    for (double v : r.scores) nonzero += std::abs(v) >= kDisplayThreshold;
    out << fmt::format("  {}/{} ({} students, {} features above threshold)\n", method_name(r.method), r.course_id,
                       r.n_students, nonzero);
    for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i)
      out << fmt::format("    {:<34} {:+.4f}\n", r.features[order[i]], r.scores[order[i]]);
  }

  for (const auto& m : matrices) {
    out << fmt::format("\n{} matrix\n", metric_name(m.metric));
    for (std::size_t i = 0; i < m.size(); ++i) {
      out << fmt::format("  {:<28}", m.labels[i]);
      for (std::size_t j = 0; j < m.size(); ++j) out << fmt::format(" {:+.3f}", m.at(i, j));
      out << '\n';
    }
    const auto [within, cross] = within_cross_means(m);
    out << fmt::format("  mean within-method {:.4f}, mean cross-method {:.4f}\n", within, cross);
  }

  if (insights.contains("insights") && !insights["insights"].empty()) {
    out << "\nCourse-pair insights (delta = second - first)\n";
    for (const auto& in : insights["insights"]) {
      out << fmt::format("  {} {} -> {}{}\n", in["method"].get<std::string>(), in["pair"][0].get<std::string>(),
                         in["pair"][1].get<std::string>(), in["zero_change"].get<bool>() ? " (no change)" : "");
      for (const char* side : {"positive", "negative"})
        for (const auto& e : in[side])
          out << fmt::format("    {:<8} {:<34} {:+.4f} {}\n", side, e["feature"].get<std::string>(),
                             e["delta"].get<double>(), e["period"].get<std::string>());
    }
  }
  if (!warnings.empty()) {
    out << "\nWarnings\n";
    for (const auto& w : warnings) out << "  " << w << '\n';
  }
  return out.str();
}

}  // namespace elab
