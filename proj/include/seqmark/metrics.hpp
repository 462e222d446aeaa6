#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "seqmark/labels.hpp"

namespace seqmark {

/// One-vs-rest token counts for a single label.
struct LabelMetrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0;
  double precision = 0.0;  // 0 when tp + fp = 0
  double recall = 0.0;     // 0 when tp + fn = 0
  double f1 = 0.0;         // 0 when precision + recall = 0
};

struct MetricsReport {
  std::array<LabelMetrics, kNumLabels> labels{};
  std::size_t sentences = 0;
  std::size_t exact_sentences = 0;
  std::size_t tokens = 0;
  std::size_t correct_tokens = 0;
  double sentence_accuracy = 0.0;
};

/// Token metrics include every O token. Throws DimensionError when a
/// prediction's length differs from its gold sequence.
MetricsReport compute_metrics(std::span<const std::vector<std::size_t>> gold,
                              std::span<const std::vector<std::size_t>> predicted);

nlohmann::json to_json(const MetricsReport& r);
std::string format_table(const MetricsReport& r);

/// Half-open token span [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

/// A span opens at every B-Rumor, and at an I-Rumor that follows O or the
/// sequence start; it extends through the following I-Rumor labels.
std::vector<Span> labels_to_spans(std::span<const std::size_t> labels);

}  // namespace seqmark
