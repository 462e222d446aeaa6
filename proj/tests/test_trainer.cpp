#include <cmath>
#include <sstream>

#include "doctest.h"

#include "seqmark/checkpoint.hpp"
#include "seqmark/config.hpp"
#include "seqmark/metrics.hpp"
#include "seqmark/model.hpp"
#include "seqmark/train.hpp"

using namespace seqmark;

namespace {

const std::size_t B = label_index(Label::BRumor), I = label_index(Label::IRumor), O = label_index(Label::O);

ModelConfig small_model(std::size_t vocab = 12) {
  ModelConfig c = ModelConfig::gradcheck_preset();
  c.vocab_size = vocab;
  c.max_len = 64;
  return c;
}

bool has_prefix(const ParamList& params, const std::string& prefix) {
  for (const auto& p : params)
    if (p.name.rfind(prefix, 0) == 0) return true;
  return false;
}

struct Corpus {
  std::vector<LabeledExample> examples;
  Vocabulary vocab;
};

Corpus indexed_corpus(std::uint64_t seed, std::size_t count) {
  Corpus c{synth_generate({seed, count, 40, 48}), {}};
  c.vocab = build_vocab(c.examples);
  index_examples(c.examples, c.vocab);
  return c;
}

}  // namespace

TEST_SUITE("trainer_cli") {

TEST_CASE("config: parse, comments, errors, write round trip") {
  std::istringstream in("# comment\nd_model = 16\nuse_crf=false\nlr=paper\nextractor=lstm  # trailing\n");
  RunConfig c = parse_config(in);
  CHECK(c.model.d_model == 16);
  CHECK_FALSE(c.model.use_crf);
  CHECK(c.train.lr == TrainConfig::kPaperLearningRate);
  CHECK(c.model.extractor == Extractor::Lstm);

  std::ostringstream out;
  write_config(out, c);
  std::istringstream back(out.str());
  RunConfig again = parse_config(back);
  CHECK(again.model == c.model);
  CHECK(again.train.lr == c.train.lr);

  auto line_of = [](const std::string& text) {
    std::istringstream s(text);
    try {
      parse_config(s);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(line_of("d_model=8\nbogus=1\n").find("line 2") != std::string::npos);
  CHECK(line_of("d_model=eight\n").find("line 1") != std::string::npos);
  CHECK(line_of("novalue\n").find("line 1") != std::string::npos);
  CHECK(model_config_from_json(to_json(c.model)) == c.model);
}

TEST_CASE("config: validation names the fields") {
  ModelConfig c = small_model();
  c.d_model = 0;
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("d_model") != std::string::npos);
  }
  c = small_model();
  c.vocab_size = 0;
  CHECK_THROWS_AS(Model::assemble(c), ConfigError);
}

TEST_CASE("ablations: parse and switch the documented flags") {
  CHECK(parse_ablation("none") == Ablation::None);
  CHECK_THROWS_AS(parse_ablation("ir-everything"), ConfigError);
  for (auto a : {Ablation::IrBert, Ablation::IrMamba2, Ablation::IrDotPAtt, Ablation::IrSkipCon, Ablation::IrCrf})
    CHECK(parse_ablation(ablation_name(a)) == a);

  ModelConfig base = small_model();
  auto with = [&](Ablation a) {
    ModelConfig c = base;
    apply_ablation(c, a);
    return c;
  };
  CHECK_FALSE(with(Ablation::IrBert).use_encoder);
  CHECK(with(Ablation::IrMamba2).extractor == Extractor::Lstm);
  CHECK_FALSE(with(Ablation::IrDotPAtt).use_attention_fusion);
  CHECK_FALSE(with(Ablation::IrSkipCon).use_skip_connection);
  CHECK_FALSE(with(Ablation::IrCrf).use_crf);
}

TEST_CASE("assemble: determinism, shape, parameter manifests per ablation") {
  Model a = Model::assemble(small_model()), b = Model::assemble(small_model());
  REQUIRE(a.params().size() == b.params().size());
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    CHECK(a.params()[i].name == b.params()[i].name);
    CHECK(a.params()[i].var.value() == b.params()[i].var.value());
  }
  const std::vector<std::size_t> tokens{1, 2, 3, 4, 5};
  Var em = a.emissions(tokens);
  CHECK(em.rows() == 5);
  CHECK(em.cols() == 3);

  ModelConfig wider = small_model();
  wider.skip_h1 += 4;
  CHECK(Model::assemble(wider).parameter_count() > a.parameter_count());

  auto manifest = [](Ablation ab) {
    ModelConfig c = small_model();
    apply_ablation(c, ab);
    return Model::assemble(c);
  };
  const Model full = manifest(Ablation::None);
  CHECK(has_prefix(full.params(), "encoder.layer0."));
  CHECK(has_prefix(full.params(), "head.layer1_w"));
  CHECK(has_prefix(full.params(), "crf."));
  CHECK_FALSE(has_prefix(full.params(), "fusion."));

  const Model no_bert = manifest(Ablation::IrBert);
  CHECK_FALSE(has_prefix(no_bert.params(), "encoder.layer"));
  CHECK(has_prefix(no_bert.params(), "encoder.token"));
  CHECK(no_bert.parameter_count() < full.parameter_count());

  const Model lstm = manifest(Ablation::IrMamba2);
  CHECK(has_prefix(lstm.params(), "extractor.lstm."));
  CHECK_FALSE(has_prefix(lstm.params(), "extractor.forward."));

  const Model concat = manifest(Ablation::IrDotPAtt);
  CHECK(has_prefix(concat.params(), "fusion.concat_w"));
  CHECK(concat.parameter_count() > full.parameter_count());

  const Model direct = manifest(Ablation::IrSkipCon);
  CHECK_FALSE(has_prefix(direct.params(), "head.layer1"));
  CHECK_FALSE(has_prefix(direct.params(), "head.layer2"));
  CHECK(direct.parameter_count() < full.parameter_count());

  const Model no_crf = manifest(Ablation::IrCrf);
  CHECK_FALSE(has_prefix(no_crf.params(), "crf."));
  CHECK(no_crf.parameter_count() + 15 == full.parameter_count());
}

TEST_CASE("assemble: ablated models still produce N×3 emissions and decode") {
  const std::vector<std::size_t> tokens{3, 1, 4, 1, 5, 9};
  for (auto ab : {Ablation::None, Ablation::IrBert, Ablation::IrMamba2, Ablation::IrDotPAtt, Ablation::IrSkipCon,
                  Ablation::IrCrf}) {
    ModelConfig c = small_model();
    apply_ablation(c, ab);
    Model m = Model::assemble(c);
    CHECK(m.emissions(tokens).rows() == 6);
    CHECK(m.decode(tokens).size() == 6);
  }
}

TEST_CASE("metrics: perfect predictions") {
  const std::vector<std::vector<std::size_t>> gold{{O, B, I, O}, {B, I, I}};
  auto r = compute_metrics(gold, gold);
  for (const auto& m : r.labels) {
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
  }
  CHECK(r.sentence_accuracy == 1.0);
}

TEST_CASE("metrics: all-O predictor and zero-denominator convention") {
  const std::vector<std::vector<std::size_t>> gold{{O, B, I, O}, {B, I, I}};
  const std::vector<std::vector<std::size_t>> pred{{O, O, O, O}, {O, O, O}};
  auto r = compute_metrics(gold, pred);
  CHECK(r.labels[O].recall == 1.0);
  CHECK(r.labels[B].recall == 0.0);
  CHECK(r.labels[I].recall == 0.0);
  CHECK(r.labels[B].precision == 0.0);
  CHECK(r.labels[I].precision == 0.0);
  CHECK(r.labels[B].f1 == 0.0);
  CHECK(r.sentence_accuracy == 0.0);
}

TEST_CASE("metrics: hand tally, one wrong token") {
  // second sequence: gold I at position 2 predicted as O
  const std::vector<std::vector<std::size_t>> gold{{O, B, I, O}, {B, I, I}};
  const std::vector<std::vector<std::size_t>> pred{{O, B, I, O}, {B, I, O}};
  auto r = compute_metrics(gold, pred);
  CHECK(r.sentence_accuracy == 0.5);
  CHECK(r.sentences == 2);
  CHECK(r.exact_sentences == 1);
  CHECK(r.tokens == 7);
  CHECK(r.correct_tokens == 6);
  // B: tp 2, fp 0, fn 0, tn 5
  CHECK(r.labels[B].tp == 2);
  CHECK(r.labels[B].fp == 0);
  CHECK(r.labels[B].fn == 0);
  CHECK(r.labels[B].tn == 5);
  // I: tp 2, fp 0, fn 1, tn 4
  CHECK(r.labels[I].tp == 2);
  CHECK(r.labels[I].fp == 0);
  CHECK(r.labels[I].fn == 1);
  CHECK(r.labels[I].tn == 4);
  CHECK(r.labels[I].recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.labels[I].f1 == doctest::Approx(0.8));
  // O: tp 2, fp 1, fn 0, tn 4
  CHECK(r.labels[O].tp == 2);
  CHECK(r.labels[O].fp == 1);
  CHECK(r.labels[O].fn == 0);
  CHECK(r.labels[O].tn == 4);
  CHECK(r.labels[O].precision == doctest::Approx(2.0 / 3.0));
  CHECK(r.labels[O].accuracy == doctest::Approx(6.0 / 7.0));

  for (const auto& m : r.labels) {
    CHECK(m.tp + m.fp + m.fn + m.tn == r.tokens);
    if (m.tp + m.fp) CHECK(m.precision * static_cast<double>(m.tp + m.fp) == doctest::Approx(m.tp));
    if (m.tp + m.fn) CHECK(m.recall * static_cast<double>(m.tp + m.fn) == doctest::Approx(m.tp));
  }
  const std::vector<std::vector<std::size_t>> short_pred{{O, B, I}, {B, I, O}};
  CHECK_THROWS_AS(compute_metrics(gold, short_pred), DimensionError);
}

TEST_CASE("spans") {
  CHECK(labels_to_spans(std::vector<std::size_t>{O, B, I, O}) == std::vector<Span>{{1, 3}});
  CHECK(labels_to_spans(std::vector<std::size_t>{O, O, O}).empty());
  CHECK(labels_to_spans(std::vector<std::size_t>{B, I, B, I}) == std::vector<Span>{{0, 2}, {2, 4}});
  CHECK(labels_to_spans(std::vector<std::size_t>{I, I, O, I}) == std::vector<Span>{{0, 2}, {3, 4}});
  CHECK(labels_to_spans(std::vector<std::size_t>{B}) == std::vector<Span>{{0, 1}});
}

TEST_CASE("train: loss falls, history is deterministic, best epoch restored") {
  Corpus c = indexed_corpus(7, 24);
  ModelConfig mc = small_model(c.vocab.size());
  TrainConfig tc;
  tc.epochs = 10;
  tc.lr = 3e-3;
  std::vector<LabeledExample> val(c.examples.begin(), c.examples.begin() + 4);

  Model a = Model::assemble(mc), b = Model::assemble(mc);
  auto ra = train(a, tc, c.examples, val);
  auto rb = train(b, tc, c.examples, val);
  REQUIRE(ra.history.size() == 10);
  CHECK(ra.history.back().train_loss < ra.history.front().train_loss);
  for (std::size_t e = 0; e < 10; ++e) {
    CHECK(std::abs(ra.history[e].train_loss - rb.history[e].train_loss) < 1e-12);
    CHECK(ra.history[e].epoch == e + 1);
  }
  double best = ra.history[0].val_loss;
  for (const auto& h : ra.history) best = std::min(best, h.val_loss);
  CHECK(ra.history[ra.best_epoch - 1].val_loss == best);
  CHECK(std::abs(mean_loss(a, val) - best) < 1e-12);
}

TEST_CASE("train: one step equals a hand-applied Adam step") {
  Corpus c = indexed_corpus(8, 1);
  ModelConfig mc = small_model(c.vocab.size());
  TrainConfig tc;
  tc.epochs = 1;
  Model trained = Model::assemble(mc);
  train(trained, tc, c.examples, {});

  Model manual = Model::assemble(mc);
  manual.loss(c.examples[0].tokens, c.examples[0].labels).backward();
  AdamHyper h;
  h.lr = tc.lr;
  for (std::size_t i = 0; i < manual.params().size(); ++i) {
    const auto& p = manual.params()[i];
    AdamState s(p.var.shape());
    Tensor theta = p.var.value();
    adam_step(theta, p.var.grad(), s, h);
    CHECK(max_abs_diff(theta, trained.params()[i].var.value()) == 0.0);
  }
}

TEST_CASE("train: early stopping and callback stop") {
  Corpus c = indexed_corpus(9, 12);
  ModelConfig mc = small_model(c.vocab.size());
  TrainConfig tc;
  tc.epochs = 50;
  tc.patience = 2;
  tc.lr = 0.5;  // large steps make validation loss bounce
  Model m = Model::assemble(mc);
  auto r = train(m, tc, c.examples, c.examples);
  if (r.early_stopped) CHECK(r.history.size() < 50);
  CHECK(r.history.size() <= 50);

  Model m2 = Model::assemble(mc);
  TrainConfig short_run;
  short_run.epochs = 10;
  auto r2 = train(m2, short_run, c.examples, {}, [](const EpochStats& s, const Model&) { return s.epoch < 3; });
  CHECK(r2.history.size() == 3);
}

TEST_CASE("checkpoint: byte-identical round trip and unchanged evaluation") {
  Corpus c = indexed_corpus(11, 20);
  Model m = Model::assemble(small_model(c.vocab.size()));
  TrainConfig tc;
  tc.epochs = 2;
  train(m, tc, c.examples, {});
  Tagger tagger{std::move(m), c.vocab};
  auto bytes = serialize_checkpoint(tagger);
  Tagger loaded = deserialize_checkpoint(bytes);
  CHECK(serialize_checkpoint(loaded) == bytes);
  CHECK(loaded.vocab == tagger.vocab);
  CHECK(loaded.model.config() == tagger.model.config());
  const auto before = to_json(evaluate(tagger.model, c.examples)).dump();
  CHECK(to_json(evaluate(loaded.model, c.examples)).dump() == before);
}

TEST_CASE("checkpoint: distinct errors for damaged files") {
  Tagger tagger{Model::assemble(small_model()), Vocabulary(std::vector<std::string>{"[UNK]", "a", "b"})};
  auto bytes = serialize_checkpoint(tagger);
  auto kind_of = [](const std::vector<char>& data) {
    try {
      deserialize_checkpoint(data);
    } catch (const CheckpointError& e) {
      return static_cast<int>(e.kind);
    }
    return -1;
  };
  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  CHECK(kind_of(truncated) == static_cast<int>(CheckpointError::Kind::Truncated));
  CHECK(kind_of(std::vector<char>(bytes.begin(), bytes.begin() + 5)) ==
        static_cast<int>(CheckpointError::Kind::Truncated));

  auto magic = bytes;
  magic[0] = 'X';
  CHECK(kind_of(magic) == static_cast<int>(CheckpointError::Kind::BadMagic));

  std::string text(bytes.begin(), bytes.end());
  auto pos = text.find("\"format_version\":1");
  REQUIRE(pos != std::string::npos);
  auto version = bytes;
  version[pos + 17] = '7';
  CHECK(kind_of(version) == static_cast<int>(CheckpointError::Kind::VersionMismatch));

  auto corrupt = bytes;
  corrupt[16] = '#';  // first manifest byte
  CHECK(kind_of(corrupt) == static_cast<int>(CheckpointError::Kind::CorruptManifest));

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/model.ckpt"), CheckpointError);
}

TEST_CASE("mark: spans and rendering") {
  Model m = Model::assemble(small_model(4));
  // Force the decoder: emissions are dominated by the CRF start/transitions.
  CrfParams crf = *m.crf();  // shared handles: writes reach the model
  Tensor trans(3, 3, -50.0);
  trans(B, I) = 50.0;
  trans(I, O) = 50.0;
  trans(O, O) = 0.0;
  crf.transitions.mutable_value() = trans;
  Tensor start(1, 3, -50.0);
  start(0, B) = 0.0;
  crf.start.mutable_value() = start;
  crf.end.mutable_value() = Tensor(1, 3);
  Tagger tagger{std::move(m), Vocabulary(std::vector<std::string>{"[UNK]", "甲", "乙", "丙"})};
  auto r = mark(tagger, "甲乙丙 丙");
  REQUIRE(r.tokens.size() == 4);
  CHECK(r.labels == std::vector<std::size_t>{B, I, O, O});
  REQUIRE(r.spans.size() == 1);
  CHECK(r.spans[0].begin == 0);
  CHECK(r.spans[0].end == 2);
  CHECK(r.spans[0].text == "甲乙");
  CHECK(r.rendered == "[甲乙]丙丙");
}

TEST_CASE("run_gradcheck: full objective and token loss variant") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto report = run_gradcheck(ModelConfig::gradcheck_preset(), seed, 6);
    CHECK(report.max_rel_error() < kGradCheckTolerance);
    ModelConfig ce = ModelConfig::gradcheck_preset();
    ce.use_crf = false;
    CHECK(run_gradcheck(ce, seed, 6).max_rel_error() < kGradCheckTolerance);
  }
  for (auto ab : {Ablation::IrBert, Ablation::IrMamba2, Ablation::IrDotPAtt, Ablation::IrSkipCon}) {
    ModelConfig c = ModelConfig::gradcheck_preset();
    apply_ablation(c, ab);
    CHECK(run_gradcheck(c, 4, 6).max_rel_error() < kGradCheckTolerance);
  }
  CHECK_THROWS_AS(run_gradcheck(ModelConfig::gradcheck_preset(), 1, 0), ConfigError);
}

TEST_CASE("gradcheck: a group outside the objective reports zero on both sides") {
  Var used = Var::parameter(Tensor::from_rows({{0.5, -1.0}}));
  Var frozen = Var::parameter(Tensor::from_rows({{2.0}}));
  auto report = grad_check([&] { return sum(mul(used, used)); }, {{"used", used}, {"frozen", frozen}});
  REQUIRE(report.groups.size() == 2);
  CHECK(report.groups[1].name == "frozen");
  CHECK(report.groups[1].max_abs_analytic == 0.0);
  CHECK(report.groups[1].max_abs_numeric == 0.0);
}

}  // TEST_SUITE
