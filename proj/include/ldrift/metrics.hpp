#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace ldrift::eval {

// counts[t][p]: instances of true class t predicted as p (0 = Normal, 1 = Attack).
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, 2>, 2> counts{};

  std::uint64_t total() const;
  // Row-normalised percentages (each true-class row sums to 100, or is all 0).
  std::array<std::array<double, 2>, 2> row_percentages() const;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;  // support-weighted averages
  double recall = 0.0;
  double f1 = 0.0;
  std::array<ClassMetrics, 2> per_class{};
  ConfusionMatrix confusion;
  // Names of quantities whose denominator was zero and were reported as 0.
  std::vector<std::string> zero_division;
};

// Recall is TP / (TP + FN) per class. Zero denominators yield 0 and are listed
// in zero_division instead of producing NaN.
MetricsReport metrics(const ConfusionMatrix& cm);
MetricsReport evaluate(std::span<const int> truth, std::span<const int> predicted);

nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const ConfusionMatrix& cm);
// Flat "key = value" lines.
std::string to_text(const MetricsReport& r);

}  // namespace ldrift::eval
