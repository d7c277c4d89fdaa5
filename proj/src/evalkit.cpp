#include "advmt/evalkit.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace advmt {

namespace {

double t_test_p_value(double r, std::size_t n) {
  if (std::abs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

}  // namespace

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UndefinedCorrelation("length mismatch");
  if (x.size() < 3) throw UndefinedCorrelation("need at least 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw UndefinedCorrelation("zero variance");
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return {r, t_test_p_value(r, x.size())};
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UndefinedCorrelation("length mismatch");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

std::vector<double> minmax_normalize(std::span<const double> scores) {
  if (scores.empty()) return {};
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double min = *lo, range = *hi - *lo;
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(range == 0 ? 0.5 : (s - min) / range);
  return out;
}

std::string blend_strategy_str(BlendStrategy s) {
  switch (s) {
    case BlendStrategy::Min: return "min";
    case BlendStrategy::Max: return "max";
    case BlendStrategy::Geometric: return "geometric";
    case BlendStrategy::Arithmetic: return "arithmetic";
  }
  return "?";
}

BlendStrategy parse_blend_strategy(const std::string& text) {
  if (text == "min") return BlendStrategy::Min;
  if (text == "max") return BlendStrategy::Max;
  if (text == "geometric") return BlendStrategy::Geometric;
  if (text == "arithmetic") return BlendStrategy::Arithmetic;
  throw std::invalid_argument("unknown blend strategy '" + text + "'");
}

double blend(double referenced, double unreferenced, BlendStrategy strategy) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(referenced) || !in_unit(unreferenced))
    throw std::domain_error("blend: scores must be normalized to [0, 1]");
  switch (strategy) {
    case BlendStrategy::Min: return std::min(referenced, unreferenced);
    case BlendStrategy::Max: return std::max(referenced, unreferenced);
    case BlendStrategy::Geometric: return std::sqrt(referenced * unreferenced);
    case BlendStrategy::Arithmetic: return (referenced + unreferenced) / 2.0;
  }
  return 0.0;
}

double normalize_ratings(std::span<const int> ratings) {
  if (ratings.empty()) throw std::invalid_argument("no annotator ratings");
  double sum = 0;
  for (int r : ratings) {
    if (r < 0 || r > 2) throw std::invalid_argument("rating " + std::to_string(r) + " outside 0..2");
    sum += r;
  }
  return sum / static_cast<double>(ratings.size()) / 2.0;
}

CorrelationReport correlate(std::span<const ScoredPair> pairs, std::span<const std::string> metrics) {
  std::vector<double> human;
  for (const auto& p : pairs) human.push_back(p.human);
  CorrelationReport report;
  for (const auto& name : metrics) {
    MetricCorrelation row;
    row.metric = name;
    std::vector<double> scores;
    for (const auto& p : pairs) {
      auto it = p.metrics.find(name);
      if (it == p.metrics.end()) throw std::invalid_argument("metric '" + name + "' missing from a scored pair");
      scores.push_back(it->second);
    }
    try {
      row.pearson = pearson(scores, human);
      row.spearman = spearman(scores, human);
    } catch (const UndefinedCorrelation& e) {
      row.pearson.reset();
      row.spearman.reset();
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_report(std::ostream& os, const CorrelationReport& report) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "metric\tpearson\tpearson_p\tspearman\tspearman_p\n";
  for (const auto& r : report.rows) {
    os << r.metric;
    for (const auto& c : {r.pearson, r.spearman}) {
      if (c) os << '\t' << c->coefficient << '\t' << c->p_value;
      else os << "\tNA\tNA";
    }
    os << '\n';
  }
  os.precision(old);
}

}  // namespace advmt
