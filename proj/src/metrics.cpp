#include "seqmark/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "seqmark/tensor.hpp"

namespace seqmark {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport compute_metrics(std::span<const std::vector<std::size_t>> gold,
                              std::span<const std::vector<std::size_t>> predicted) {
  if (gold.size() != predicted.size()) {
    throw DimensionError("compute_metrics: " + std::to_string(gold.size()) + " gold sequences vs " +
                         std::to_string(predicted.size()) + " predictions");
  }
  MetricsReport r;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const auto& g = gold[s];
    const auto& p = predicted[s];
    if (g.size() != p.size()) {
      throw DimensionError("compute_metrics: sequence " + std::to_string(s) + " has " +
                           std::to_string(g.size()) + " gold labels but " + std::to_string(p.size()) +
                           " predictions");
    }
    bool exact = true;
    for (std::size_t t = 0; t < g.size(); ++t) {
      if (g[t] == p[t]) ++r.correct_tokens;
      else exact = false;
      for (std::size_t l = 0; l < kNumLabels; ++l) {
        auto& m = r.labels[l];
        const bool is_gold = g[t] == l, is_pred = p[t] == l;
        if (is_gold && is_pred) ++m.tp;
        else if (is_pred) ++m.fp;
        else if (is_gold) ++m.fn;
        else ++m.tn;
      }
    }
    r.tokens += g.size();
    ++r.sentences;
    if (exact) ++r.exact_sentences;
  }
  for (auto& m : r.labels) {
    m.accuracy = ratio(m.tp + m.tn, r.tokens);
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  }
  r.sentence_accuracy = ratio(r.exact_sentences, r.sentences);
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json labels = nlohmann::json::object();
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    const auto& m = r.labels[l];
    labels[std::string(label_name(l))] = {
        {"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn},
        {"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
    };
  }
  return {
      {"labels", labels},
      {"sentences", r.sentences},
      {"exact_sentences", r.exact_sentences},
      {"sentence_accuracy", r.sentence_accuracy},
      {"tokens", r.tokens},
      {"correct_tokens", r.correct_tokens},
  };
}

std::string format_table(const MetricsReport& r) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %9s %9s %9s %9s %8s %8s %8s\n", "label", "accuracy", "precision",
                "recall", "f1", "tp", "fp", "fn");
  out << buf;
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    const auto& m = r.labels[l];
    std::snprintf(buf, sizeof buf, "%-8s %9.4f %9.4f %9.4f %9.4f %8zu %8zu %8zu\n",
                  std::string(label_name(l)).c_str(), m.accuracy, m.precision, m.recall, m.f1, m.tp,
                  m.fp, m.fn);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "full-sentence accuracy %.4f (%zu/%zu sentences, %zu tokens)\n",
                r.sentence_accuracy, r.exact_sentences, r.sentences, r.tokens);
  out << buf;
  return out.str();
}

std::vector<Span> labels_to_spans(std::span<const std::size_t> labels) {
  const auto B = label_index(Label::BRumor), I = label_index(Label::IRumor);
  std::vector<Span> spans;
  std::size_t t = 0;
  while (t < labels.size()) {
    if (labels[t] == B || labels[t] == I) {
      // An I reached here follows O or the start: tolerated as an opener.
      std::size_t end = t + 1;
      while (end < labels.size() && labels[end] == I) ++end;
      spans.push_back({t, end});
      t = end;
    } else {
      ++t;
    }
  }
  return spans;
}

}  // namespace seqmark
