#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace lsan {

/// Sorted, duplicate-free label indices.
using LabelSet = std::vector<std::size_t>;

/// Which denominator the recall average uses. kPrinted divides by the
/// predicted-set size, which makes it numerically identical to precision;
/// it exists only to replicate published numbers computed that way.
enum class RecallMode { kStandard, kPrinted };

RecallMode parse_recall_mode(std::string_view text);
std::string_view to_string(RecallMode mode);

struct MetricsReport {
  double avg_precision = 0.0;
  double avg_recall = 0.0;
  double avg_f1 = 0.0;
  std::size_t n = 0;
};

/// Labels whose output is >= threshold; when none qualify, the single
/// highest-scoring label (lowest index on ties). Never empty for K >= 1.
LabelSet threshold_labels(std::span<const double> outputs, double threshold);

/// Indices of the nonzero entries of a 0/1 vector.
LabelSet labels_from_one_hot(std::span<const double> one_hot);

/// Per-sample precision |Y ∩ P| / |P|, recall |Y ∩ P| / |Y| and
/// F1 2|Y ∩ P| / (|Y| + |P|), averaged over samples.
MetricsReport compute_metrics(std::span<const LabelSet> truth, std::span<const LabelSet> predicted,
                              RecallMode recall = RecallMode::kStandard);

void write_metrics_text(std::ostream& out, const MetricsReport& report);
void write_metrics_csv(std::ostream& out, const MetricsReport& report);

}  // namespace lsan
