#include "cryptext/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace cryptext {

MetricsReport compute_report(std::span<const int> y_true, std::span<const int> y_pred,
                             const std::vector<std::string>& label_names) {
  if (y_true.size() != y_pred.size()) {
    throw std::invalid_argument("y_true and y_pred length mismatch");
  }
  if (y_true.empty()) {
    throw std::invalid_argument("cannot compute metrics on zero samples");
  }
  const int n_classes = static_cast<int>(label_names.size());
  for (size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= n_classes || y_pred[i] < 0 || y_pred[i] >= n_classes) {
      throw std::invalid_argument("label out of range at sample " + std::to_string(i));
    }
  }

  std::vector<long> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0), support(n_classes, 0);
  long correct = 0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    support[y_true[i]]++;
    if (y_true[i] == y_pred[i]) {
      tp[y_true[i]]++;
      correct++;
    } else {
      fp[y_pred[i]]++;
      fn[y_true[i]]++;
    }
  }

  MetricsReport report;
  report.n_samples = static_cast<long>(y_true.size());
  report.accuracy = static_cast<double>(correct) / static_cast<double>(report.n_samples);

  auto ratio = [](long num, long den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  for (int c = 0; c < n_classes; ++c) {
    ClassMetrics m;
    m.label_name = label_names[c];
    m.support = support[c];
    m.precision = ratio(tp[c], tp[c] + fp[c]);
    m.recall = ratio(tp[c], tp[c] + fn[c]);
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    report.per_class.push_back(std::move(m));
  }

  for (const auto& m : report.per_class) {
    report.macro_avg.precision += m.precision / n_classes;
    report.macro_avg.recall += m.recall / n_classes;
    report.macro_avg.f1 += m.f1 / n_classes;
    const double w = static_cast<double>(m.support) / static_cast<double>(report.n_samples);
    report.weighted_avg.precision += w * m.precision;
    report.weighted_avg.recall += w * m.recall;
    report.weighted_avg.f1 += w * m.f1;
  }
  return report;
}

DeltaReport compare_reports(const MetricsReport& a, const MetricsReport& b) {
  if (a.per_class.size() != b.per_class.size()) {
    throw std::invalid_argument("reports cover different numbers of classes");
  }
  for (size_t c = 0; c < a.per_class.size(); ++c) {
    if (a.per_class[c].label_name != b.per_class[c].label_name) {
      throw std::invalid_argument("label mismatch: '" + a.per_class[c].label_name +
                                  "' vs '" + b.per_class[c].label_name + "'");
    }
  }

  DeltaReport delta;
  double max_abs = 0.0;
  auto track = [&max_abs](double d) {
    max_abs = std::max(max_abs, std::fabs(d));
    return d;
  };
  delta.accuracy_delta = track(a.accuracy - b.accuracy);
  delta.macro_delta = {track(a.macro_avg.precision - b.macro_avg.precision),
                       track(a.macro_avg.recall - b.macro_avg.recall),
                       track(a.macro_avg.f1 - b.macro_avg.f1)};
  delta.weighted_delta = {track(a.weighted_avg.precision - b.weighted_avg.precision),
                          track(a.weighted_avg.recall - b.weighted_avg.recall),
                          track(a.weighted_avg.f1 - b.weighted_avg.f1)};
  for (size_t c = 0; c < a.per_class.size(); ++c) {
    ClassMetrics d;
    d.label_name = a.per_class[c].label_name;
    d.precision = track(a.per_class[c].precision - b.per_class[c].precision);
    d.recall = track(a.per_class[c].recall - b.per_class[c].recall);
    d.f1 = track(a.per_class[c].f1 - b.per_class[c].f1);
    d.support = a.per_class[c].support - b.per_class[c].support;
    max_abs = std::max(max_abs, std::fabs(static_cast<double>(d.support)));
    delta.per_class_delta.push_back(std::move(d));
  }
  delta.max_abs_delta = max_abs;
  delta.exact_equal = max_abs == 0.0;
  return delta;
}

std::string render_report(const MetricsReport& report) {
  size_t name_width = 12;
  for (const auto& m : report.per_class) {
    name_width = std::max(name_width, m.label_name.size());
  }
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%*s  precision  recall  f1-score  support\n\n",
                static_cast<int>(name_width), "");
  out << buf;
  for (const auto& m : report.per_class) {
    std::snprintf(buf, sizeof(buf), "%*s      %5.2f   %5.2f     %5.2f  %7ld\n",
                  static_cast<int>(name_width), m.label_name.c_str(), m.precision,
                  m.recall, m.f1, m.support);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "\n%*s                            %5.2f  %7ld\n",
                static_cast<int>(name_width), "accuracy", report.accuracy,
                report.n_samples);
  out << buf;
  std::snprintf(buf, sizeof(buf), "%*s      %5.2f   %5.2f     %5.2f  %7ld\n",
                static_cast<int>(name_width), "macro avg", report.macro_avg.precision,
                report.macro_avg.recall, report.macro_avg.f1, report.n_samples);
  out << buf;
  std::snprintf(buf, sizeof(buf), "%*s      %5.2f   %5.2f     %5.2f  %7ld\n",
                static_cast<int>(name_width), "weighted avg",
                report.weighted_avg.precision, report.weighted_avg.recall,
                report.weighted_avg.f1, report.n_samples);
  out << buf;
  return out.str();
}

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& m : report.per_class) {
    per_class.push_back({{"label_name", m.label_name},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  }
  return {{"accuracy", report.accuracy},
          {"per_class", per_class},
          {"macro_avg",
           {{"precision", report.macro_avg.precision},
            {"recall", report.macro_avg.recall},
            {"f1", report.macro_avg.f1}}},
          {"weighted_avg",
           {{"precision", report.weighted_avg.precision},
            {"recall", report.weighted_avg.recall},
            {"f1", report.weighted_avg.f1}}},
          {"n_samples", report.n_samples},
          {"zero_division", "zero"}};
}

MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport report;
  report.accuracy = j.at("accuracy").get<double>();
  report.n_samples = j.at("n_samples").get<long>();
  for (const auto& m : j.at("per_class")) {
    report.per_class.push_back({m.at("label_name").get<std::string>(),
                                m.at("precision").get<double>(),
                                m.at("recall").get<double>(), m.at("f1").get<double>(),
                                m.at("support").get<long>()});
  }
  const auto& macro = j.at("macro_avg");
  report.macro_avg = {macro.at("precision").get<double>(), macro.at("recall").get<double>(),
                      macro.at("f1").get<double>()};
  const auto& weighted = j.at("weighted_avg");
  report.weighted_avg = {weighted.at("precision").get<double>(),
                         weighted.at("recall").get<double>(),
                         weighted.at("f1").get<double>()};
  return report;
}

nlohmann::json delta_to_json(const DeltaReport& delta) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& m : delta.per_class_delta) {
    per_class.push_back({{"label_name", m.label_name},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  }
  return {{"accuracy", delta.accuracy_delta},
          {"macro_avg",
           {{"precision", delta.macro_delta.precision},
            {"recall", delta.macro_delta.recall},
            {"f1", delta.macro_delta.f1}}},
          {"weighted_avg",
           {{"precision", delta.weighted_delta.precision},
            {"recall", delta.weighted_delta.recall},
            {"f1", delta.weighted_delta.f1}}},
          {"per_class", per_class},
          {"max_abs_delta", delta.max_abs_delta},
          {"exact_equal", delta.exact_equal}};
}

}  // namespace cryptext
