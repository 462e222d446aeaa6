#include "seqmark/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "seqmark/optim.hpp"

namespace seqmark {

TrainResult train(Model& model, const TrainConfig& config, std::span<const LabeledExample> train_set,
                  std::span<const LabeledExample> validation, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw ConfigError("train: empty training split");

  const ParamList& params = model.params();
  Adam optimizer(params, AdamHyper{config.lr});
  Rng rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_params;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto& ex = train_set[order[i]];
      zero_grads(params);
      Var loss = model.loss(ex.tokens, ex.labels);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", sequence " +
                           std::to_string(order[i]));
      }
      loss.backward();
      optimizer.step();
      total += value;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = total / static_cast<double>(train_set.size());
    if (!validation.empty()) {
      stats.val_loss = mean_loss(model, validation);
      stats.val_sentence_accuracy = evaluate(model, validation).sentence_accuracy;
    }
    result.history.push_back(stats);

    if (validation.empty() || stats.val_loss < best_val) {
      best_val = stats.val_loss;
      best_params = model.snapshot();
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience && config.patience > 0) {
      result.early_stopped = true;
    }
    const bool keep_going = on_epoch ? on_epoch(stats, model) : true;
    if (result.early_stopped || !keep_going) break;
  }
  if (!validation.empty() && !best_params.empty()) model.restore(best_params);
  return result;
}

double mean_loss(const Model& model, std::span<const LabeledExample> examples) {
  if (examples.empty()) return 0.0;
  NoGradGuard no_grad;
  double total = 0.0;
  for (const auto& ex : examples) total += model.loss(ex.tokens, ex.labels).item();
  return total / static_cast<double>(examples.size());
}

std::vector<std::vector<std::size_t>> predict(const Model& model, std::span<const LabeledExample> examples) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(model.decode(ex.tokens));
  return out;
}

MetricsReport evaluate(const Model& model, std::span<const LabeledExample> examples) {
  std::vector<std::vector<std::size_t>> gold;
  gold.reserve(examples.size());
  for (const auto& ex : examples) gold.push_back(ex.labels);
  return compute_metrics(gold, predict(model, examples));
}

MarkResult mark_tokens(const Tagger& tagger, std::span<const std::string> tokens) {
  if (tokens.empty()) throw DimensionError("mark: no tokens in input");
  MarkResult r;
  r.tokens.assign(tokens.begin(), tokens.end());
  r.labels = tagger.model.decode(tagger.vocab.encode(tokens));
  const std::string sep = tagger.model.config().tokenization == Tokenization::Whitespace ? " " : "";
  auto join = [&](std::size_t b, std::size_t e) {
    std::string s;
    for (std::size_t i = b; i < e; ++i) {
      if (i > b) s += sep;
      s += r.tokens[i];
    }
    return s;
  };
  for (const auto& span : labels_to_spans(r.labels)) r.spans.push_back({span.begin, span.end, join(span.begin, span.end)});

  std::size_t next = 0;
  for (std::size_t i = 0; i < r.tokens.size(); ++i) {
    if (i) r.rendered += sep;
    if (next < r.spans.size() && r.spans[next].begin == i) r.rendered += '[';
    r.rendered += r.tokens[i];
    if (next < r.spans.size() && r.spans[next].end == i + 1) {
      r.rendered += ']';
      ++next;
    }
  }
  return r;
}

GradCheckReport run_gradcheck(ModelConfig config, std::uint64_t seed, std::size_t length, double eps) {
  if (length == 0 || length > config.max_len) {
    throw ConfigError("gradcheck: length " + std::to_string(length) + " outside [1, max_len=" +
                      std::to_string(config.max_len) + "]");
  }
  config.seed = seed;
  Model model = Model::assemble(config);
  Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> tokens(length), labels(length);
  for (auto& t : tokens) t = rng.below(config.vocab_size);
  for (auto& l : labels) l = rng.below(kNumLabels);
  return grad_check([&] { return model.loss(tokens, labels); }, model.params(), eps);
}

MarkResult mark(const Tagger& tagger, std::string_view text) {
  const auto tokens = tokenize(text, tagger.model.config().tokenization);
  return mark_tokens(tagger, tokens);
}

}  // namespace seqmark
