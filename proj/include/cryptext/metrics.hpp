#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace cryptext {

struct ClassMetrics {
  std::string label_name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
};

struct AvgMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  AvgMetrics macro_avg;
  AvgMetrics weighted_avg;
  double accuracy = 0.0;
  long n_samples = 0;
};

// Per-class precision/recall/F1/support plus macro and weighted averages.
// Zero denominators yield 0 (recorded as "zero_division": "zero" in JSON).
MetricsReport compute_report(std::span<const int> y_true, std::span<const int> y_pred,
                             const std::vector<std::string>& label_names);

struct DeltaReport {
  double accuracy_delta = 0.0;
  AvgMetrics macro_delta;
  AvgMetrics weighted_delta;
  std::vector<ClassMetrics> per_class_delta;  // support holds the signed support delta
  double max_abs_delta = 0.0;
  bool exact_equal = false;
};

// Signed deltas a - b. Both reports must cover the same label set.
DeltaReport compare_reports(const MetricsReport& a, const MetricsReport& b);

// Classic classification-report table, two decimals.
std::string render_report(const MetricsReport& report);

nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);
nlohmann::json delta_to_json(const DeltaReport& delta);

}  // namespace cryptext
