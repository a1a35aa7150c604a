#include "lsan/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <stdexcept>
#include <string>

#include "lsan/error.hpp"

namespace lsan {

RecallMode parse_recall_mode(std::string_view text) {
  if (text == "standard") return RecallMode::kStandard;
  if (text == "printed") return RecallMode::kPrinted;
  throw std::invalid_argument("expected standard or printed, got '" + std::string(text) + "'");
}

std::string_view to_string(RecallMode mode) { return mode == RecallMode::kStandard ? "standard" : "printed"; }

LabelSet threshold_labels(std::span<const double> outputs, double threshold) {
  if (outputs.empty()) throw DimensionError("threshold_labels: empty output vector");
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
  LabelSet out;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    if (outputs[k] >= threshold) out.push_back(k);
  }
  if (out.empty()) {
    out.push_back(static_cast<std::size_t>(std::distance(outputs.begin(), std::max_element(outputs.begin(), outputs.end()))));
  }
  return out;
}

LabelSet labels_from_one_hot(std::span<const double> one_hot) {
  LabelSet out;
  for (std::size_t k = 0; k < one_hot.size(); ++k) {
    if (one_hot[k] != 0.0) out.push_back(k);
  }
  return out;
}

MetricsReport compute_metrics(std::span<const LabelSet> truth, std::span<const LabelSet> predicted, RecallMode recall) {
  if (truth.size() != predicted.size()) {
    throw DimensionError("metrics: " + std::to_string(truth.size()) + " true sets vs " +
                         std::to_string(predicted.size()) + " predicted sets");
  }
  if (truth.empty()) throw DataError("metrics: no samples");
  MetricsReport r;
  r.n = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const LabelSet& y = truth[i];
    const LabelSet& p = predicted[i];
    if (p.empty()) throw DataError("metrics: predicted set " + std::to_string(i) + " is empty");
    if (y.empty()) throw DataError("metrics: true set " + std::to_string(i) + " is empty");
    LabelSet common;
    std::set_intersection(y.begin(), y.end(), p.begin(), p.end(), std::back_inserter(common));
    const double hit = static_cast<double>(common.size());
    r.avg_precision += hit / static_cast<double>(p.size());
    r.avg_recall += hit / static_cast<double>(recall == RecallMode::kStandard ? y.size() : p.size());
    r.avg_f1 += 2.0 * hit / static_cast<double>(y.size() + p.size());
  }
  const double n = static_cast<double>(r.n);
  r.avg_precision /= n;
  r.avg_recall /= n;
  r.avg_f1 /= n;
  return r;
}

void write_metrics_text(std::ostream& out, const MetricsReport& report) {
  out << std::fixed << std::setprecision(4);
  out << "samples:           " << report.n << '\n';
  out << "average precision: " << report.avg_precision << '\n';
  out << "average recall:    " << report.avg_recall << '\n';
  out << "average F1-score:  " << report.avg_f1 << '\n';
  out << std::defaultfloat;
}

void write_metrics_csv(std::ostream& out, const MetricsReport& report) {
  out << "avg_precision,avg_recall,avg_f1,n\n";
  out << std::setprecision(17) << report.avg_precision << ',' << report.avg_recall << ',' << report.avg_f1 << ','
      << report.n << '\n';
}

}  // namespace lsan
