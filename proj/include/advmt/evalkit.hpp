#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "advmt/corpus.hpp"

namespace advmt {

// Thrown when a correlation has fewer than 3 points or a constant input.
struct UndefinedCorrelation : std::domain_error {
  UndefinedCorrelation() : std::domain_error("undefined correlation") {}
  explicit UndefinedCorrelation(const std::string& why) : std::domain_error("undefined correlation: " + why) {}
};

struct Correlation {
  double coefficient = 0.0;
  // Two-sided, from t = r sqrt((n - 2) / (1 - r^2)) with n - 2 degrees of
  // freedom. Approximate for small n.
  double p_value = 1.0;
};

Correlation pearson(std::span<const double> x, std::span<const double> y);
// Pearson correlation of average ranks.
Correlation spearman(std::span<const double> x, std::span<const double> y);

// 1-based ranks; tied values share the mean of the positions they occupy.
std::vector<double> average_ranks(std::span<const double> x);

// (s - min) / (max - min); a constant list maps to 0.5 everywhere.
std::vector<double> minmax_normalize(std::span<const double> scores);

enum class BlendStrategy { Min, Max, Geometric, Arithmetic };
std::string blend_strategy_str(BlendStrategy s);
BlendStrategy parse_blend_strategy(const std::string& text);

// Both inputs must lie in [0, 1]; throws std::domain_error otherwise.
double blend(double referenced, double unreferenced, BlendStrategy strategy);

struct ScoredPair {
  Tokens query;
  Tokens generated;
  std::optional<Tokens> reference;
  double human = 0.0;  // in [0, 1]
  std::map<std::string, double> metrics;
};

// Mean of 0/1/2 annotator ratings, divided by 2.
double normalize_ratings(std::span<const int> ratings);

struct MetricCorrelation {
  std::string metric;
  std::optional<Correlation> pearson;
  std::optional<Correlation> spearman;
  std::string error;  // set when the correlation is undefined
};

struct CorrelationReport {
  std::vector<MetricCorrelation> rows;
};

// One row per metric name, in the given order. Undefined correlations are
// recorded in the row's `error` instead of aborting the report.
CorrelationReport correlate(std::span<const ScoredPair> pairs, std::span<const std::string> metrics);

// `metric<TAB>pearson<TAB>pearson_p<TAB>spearman<TAB>spearman_p`, with NA
// for undefined values.
void write_report(std::ostream& os, const CorrelationReport& report);

}  // namespace advmt
