#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "seqmark/config.hpp"
#include "seqmark/data.hpp"
#include "seqmark/gradcheck.hpp"
#include "seqmark/metrics.hpp"
#include "seqmark/model.hpp"

namespace seqmark {

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_sentence_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

/// Return false to stop after the current epoch.
using EpochCallback = std::function<bool(const EpochStats&, const Model&)>;

/// One Adam step per training sequence, in a freshly shuffled order each
/// epoch. The parameters with the lowest validation loss are restored at
/// the end (the last epoch's when `validation` is empty). Throws
/// NumericError naming the epoch and sequence on a non-finite loss.
TrainResult train(Model& model, const TrainConfig& config, std::span<const LabeledExample> train_set,
                  std::span<const LabeledExample> validation, const EpochCallback& on_epoch = {});

/// Mean loss over `examples` without recording gradients.
double mean_loss(const Model& model, std::span<const LabeledExample> examples);

std::vector<std::vector<std::size_t>> predict(const Model& model, std::span<const LabeledExample> examples);

MetricsReport evaluate(const Model& model, std::span<const LabeledExample> examples);

struct MarkedSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string text;
};

struct MarkResult {
  std::vector<std::string> tokens;
  std::vector<std::size_t> labels;
  std::vector<MarkedSpan> spans;
  /// Tokens re-joined with every span wrapped in [ ].
  std::string rendered;
};

MarkResult mark(const Tagger& tagger, std::string_view text);
MarkResult mark_tokens(const Tagger& tagger, std::span<const std::string> tokens);

/// Gradient gate: assembles `config` with the given seed, draws a random
/// token/label sequence of `length`, and compares the analytic gradient of
/// the training objective against central differences for every group.
GradCheckReport run_gradcheck(ModelConfig config, std::uint64_t seed, std::size_t length,
                              double eps = 1e-5);

inline constexpr double kGradCheckTolerance = 1e-4;

}  // namespace seqmark
