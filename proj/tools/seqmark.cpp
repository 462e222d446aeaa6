// seqmark: train, evaluate and apply the rumor-span tagger.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "seqmark/checkpoint.hpp"
#include "seqmark/config.hpp"
#include "seqmark/data.hpp"
#include "seqmark/train.hpp"

using namespace seqmark;

namespace {

int run_synth(std::uint64_t seed, std::size_t count, std::size_t vocab_size, std::size_t max_len,
              const std::string& out) {
  auto corpus = synth_generate({seed, count, vocab_size, max_len});
  save_dataset(out, corpus);
  std::size_t counts[kNumLabels] = {};
  std::size_t tokens = 0;
  for (const auto& ex : corpus) {
    for (auto l : ex.labels) ++counts[l];
    tokens += ex.size();
  }
  std::printf("wrote %zu sequences (%zu tokens) to %s\n", corpus.size(), tokens, out.c_str());
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    std::printf("  %-8s %8zu  %5.2f%%\n", std::string(label_name(l)).c_str(), counts[l],
                100.0 * static_cast<double>(counts[l]) / static_cast<double>(tokens));
  }
  return 0;
}

int run_train(const std::string& data, const std::string& config_path, const std::string& out,
              const std::string& ablation, const std::string& vocab_out, bool quiet) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  apply_ablation(cfg.model, parse_ablation(ablation));
  auto split = split_dataset(load_dataset(data), cfg.train.split_seed);
  Vocabulary vocab = build_vocab(split.train, cfg.train.min_count);
  index_examples(split.train, vocab);
  index_examples(split.validation, vocab);
  index_examples(split.test, vocab);
  cfg.model.vocab_size = vocab.size();

  Model model = Model::assemble(cfg.model);
  std::printf("split %zu/%zu/%zu  vocab %zu  parameters %zu  ablation %s\n", split.train.size(),
              split.validation.size(), split.test.size(), vocab.size(), model.parameter_count(),
              ablation.c_str());
  const auto started = std::chrono::steady_clock::now();
  auto result = train(model, cfg.train, split.train, split.validation, [&](const EpochStats& s, const Model&) {
    if (!quiet) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      std::printf("epoch %3zu  train_loss %.5f  val_loss %.5f  val_sentence_acc %.4f  (%.1fs)\n", s.epoch,
                  s.train_loss, s.val_loss, s.val_sentence_accuracy, secs);
      std::fflush(stdout);
    }
    return true;
  });
  std::printf("best epoch %zu%s\n", result.best_epoch, result.early_stopped ? " (early stop)" : "");

  Tagger tagger{std::move(model), std::move(vocab)};
  save_checkpoint(tagger, out);
  if (!vocab_out.empty()) {
    std::ofstream v(vocab_out);
    tagger.vocab.save(v);
  }
  std::printf("saved %s\n\ntest split:\n%s", out.c_str(), format_table(evaluate(tagger.model, split.test)).c_str());
  return 0;
}

int run_eval(const std::string& ckpt, const std::string& data, bool json) {
  Tagger tagger = load_checkpoint(ckpt);
  auto examples = load_dataset(data);
  index_examples(examples, tagger.vocab);
  auto report = evaluate(tagger.model, examples);
  if (json) std::cout << to_json(report).dump() << '\n';
  else std::cout << format_table(report);
  return 0;
}

int run_mark(const std::string& ckpt, const std::string& text, bool json) {
  Tagger tagger = load_checkpoint(ckpt);
  auto result = mark(tagger, text);
  if (json) {
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& s : result.spans) spans.push_back({{"start", s.begin}, {"end", s.end}, {"text", s.text}});
    std::cout << nlohmann::json{{"spans", spans}, {"rendered", result.rendered}}.dump() << '\n';
    return 0;
  }
  for (const auto& s : result.spans) std::cout << "[" << s.begin << ", " << s.end << ")\t" << s.text << '\n';
  std::cout << result.rendered << '\n';
  return 0;
}

int run_gradcheck_cmd(const std::string& config_path, std::uint64_t seed, std::size_t seeds,
                      std::optional<std::size_t> length) {
  RunConfig cfg;
  cfg.model = ModelConfig::gradcheck_preset();
  if (!config_path.empty()) cfg = load_config(config_path);
  if (cfg.model.vocab_size == 0) cfg.model.vocab_size = ModelConfig::gradcheck_preset().vocab_size;
  const std::size_t n = length.value_or(cfg.gradcheck_length);
  int status = 0;
  for (std::size_t k = 0; k < seeds; ++k) {
    const auto report = run_gradcheck(cfg.model, seed + k, n);
    const auto& worst = report.worst();
    const bool ok = worst.max_rel_error < kGradCheckTolerance;
    std::printf("seed %llu  groups %zu  worst %-40s rel_err %.3e  %s\n",
                static_cast<unsigned long long>(seed + k), report.groups.size(), worst.name.c_str(),
                worst.max_rel_error, ok ? "PASS" : "FAIL");
    if (!ok) {
      for (const auto& g : report.groups)
        if (g.max_rel_error >= kGradCheckTolerance)
          std::fprintf(stderr, "gradient check failed for %s: %.3e\n", g.name.c_str(), g.max_rel_error);
      status = 2;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seqmark: locate and mark rumor spans in token sequences"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::size_t count = 1000, vocab_size = 200, max_len = 48;
  std::string out, data, config, ablation = "none", ckpt, text, vocab_out;
  bool json = false, quiet = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic planted-rumor corpus");
  synth->add_option("--seed", seed, "generator seed");
  synth->add_option("--count", count, "number of sequences");
  synth->add_option("--vocab-size", vocab_size, "synthetic vocabulary size");
  synth->add_option("--max-len", max_len, "maximum sequence length");
  synth->add_option("--out", out, "output dataset file")->required();

  auto* train_cmd = app.add_subcommand("train", "train a tagger and write a checkpoint");
  train_cmd->add_option("--data", data, "dataset file (token<TAB>label lines)")->required();
  train_cmd->add_option("--config", config, "key=value config file");
  train_cmd->add_option("--out", out, "checkpoint path")->required();
  train_cmd->add_option("--ablation", ablation, "none|ir-bert|ir-mamba2|ir-dot-p-att|ir-skip-con|ir-crf");
  train_cmd->add_option("--vocab-out", vocab_out, "also write the vocabulary file");
  train_cmd->add_flag("--quiet", quiet, "suppress per-epoch lines");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--data", data, "dataset file")->required();
  eval_cmd->add_flag("--json", json, "emit one JSON object");

  auto* mark_cmd = app.add_subcommand("mark", "mark rumor spans in a text");
  mark_cmd->add_option("--ckpt", ckpt, "checkpoint path")->required();
  mark_cmd->add_option("--text", text, "input text")->required();
  mark_cmd->add_flag("--json", json, "emit one JSON object");

  std::size_t seeds = 1;
  std::optional<std::size_t> length;
  auto* grad_cmd = app.add_subcommand("gradcheck", "compare analytic gradients with central differences");
  grad_cmd->add_option("--config", config, "key=value config file (default: built-in gradcheck preset)");
  grad_cmd->add_option("--seed", seed, "first seed");
  grad_cmd->add_option("--seeds", seeds, "number of consecutive seeds");
  grad_cmd->add_option("--length", length, "sequence length (default: gradcheck_length from config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return run_synth(seed, count, vocab_size, max_len, out);
    if (*train_cmd) return run_train(data, config, out, ablation, vocab_out, quiet);
    if (*eval_cmd) return run_eval(ckpt, data, json);
    if (*mark_cmd) return run_mark(ckpt, text, json);
    if (*grad_cmd) return run_gradcheck_cmd(config, seed, seeds, length);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "seqmark: %s\n", e.what());
    return 1;
  }
  return 0;
}
