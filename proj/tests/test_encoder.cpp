#include "doctest.h"

#include "seqmark/encoder.hpp"
#include "seqmark/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace seqmark;

namespace {

EncoderConfig small_config(std::size_t depth = 2) { return {10, 4, 6, depth, 8}; }

Var zeros_param(std::size_t r, std::size_t c) { return Var::parameter(Tensor(r, c)); }

EncoderLayerParams random_layer(std::size_t d, std::size_t ff, Rng& rng) {
  auto p = [&](std::size_t r, std::size_t c) { return Var::parameter(random_uniform(r, c, 0.8, rng)); };
  return {p(d, d), p(d, d), p(d, d), p(d, ff), p(1, ff), p(ff, d), p(1, d)};
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("embed: zero tables give a zero matrix") {
  EmbeddingTables t{zeros_param(10, 4), zeros_param(2, 4), zeros_param(8, 4)};
  const std::vector<std::size_t> tokens{3, 1, 4}, segments(3, 0);
  CHECK(embed(t, tokens, segments).value() == Tensor(3, 4));
}

TEST_CASE("embed: one-hot token table reproduces token patterns") {
  Tensor onehot(5, 5);
  for (std::size_t i = 0; i < 5; ++i) onehot(i, i) = 1.0;
  EmbeddingTables t{Var::parameter(onehot), zeros_param(2, 5), zeros_param(8, 5)};
  const std::vector<std::size_t> tokens{4, 0, 4, 2}, segments(4, 0);
  Tensor e = embed(t, tokens, segments).value();
  for (std::size_t i = 0; i < tokens.size(); ++i)
    for (std::size_t c = 0; c < 5; ++c) CHECK(e(i, c) == (c == tokens[i] ? 1.0 : 0.0));
}

TEST_CASE("embed: row i sums the three table rows") {
  Rng rng(2);
  EncoderParams p = init_encoder(small_config(), rng);
  const std::vector<std::size_t> tokens{7, 2, 9}, segments{0, 1, 0};
  Tensor e = embed(p.embeddings, tokens, segments).value();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 4; ++c) {
      const double expected = p.embeddings.token.value()(tokens[i], c) +
                              p.embeddings.segment.value()(segments[i], c) +
                              p.embeddings.position.value()(i, c);
      CHECK(e(i, c) == expected);
    }
}

TEST_CASE("embed: position sensitivity and lookup errors") {
  Rng rng(4);
  EncoderParams p = init_encoder(small_config(), rng);
  const std::vector<std::size_t> a{1, 2, 3}, b{3, 2, 1}, seg(3, 0);
  Tensor ea = embed(p.embeddings, a, seg).value(), eb = embed(p.embeddings, b, seg).value();
  // rows of eb in a's order differ because the position rows moved
  Tensor reordered(3, 4);
  for (std::size_t c = 0; c < 4; ++c) {
    reordered(0, c) = eb(2, c);
    reordered(1, c) = eb(1, c);
    reordered(2, c) = eb(0, c);
  }
  CHECK(max_abs_diff(ea, reordered) > 1e-6);

  const std::vector<std::size_t> bad_token{1, 10};
  CHECK_THROWS_AS(embed(p.embeddings, bad_token, std::vector<std::size_t>(2, 0)), LookupError);
  const std::vector<std::size_t> too_long(9, 1);
  CHECK_THROWS_AS(embed(p.embeddings, too_long, std::vector<std::size_t>(9, 0)), LookupError);
}

TEST_CASE("self_attention: singleton returns the V row") {
  Rng rng(5);
  auto layer = random_layer(4, 6, rng);
  Tensor h = random_uniform(1, 4, 1.0, rng);
  Tensor out = self_attention_layer(Var(h), layer).value();
  CHECK(max_abs_diff(out, oracle::matmul(h, layer.w_v.value())) < 1e-15);
}

TEST_CASE("self_attention: identical rows give identical outputs") {
  Rng rng(6);
  auto layer = random_layer(4, 6, rng);
  Tensor one = random_uniform(1, 4, 1.0, rng);
  Tensor h(5, 4);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 4; ++c) h(r, c) = one(0, c);
  Tensor out = self_attention_layer(Var(h), layer).value();
  for (std::size_t r = 1; r < 5; ++r)
    for (std::size_t c = 0; c < 4; ++c) CHECK(out(r, c) == out(0, c));
}

TEST_CASE("self_attention: matches step-by-step composition") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    auto layer = random_layer(4, 6, rng);
    Tensor h = random_uniform(3, 4, 1.0, rng);
    Tensor q = oracle::matmul(h, layer.w_q.value());
    Tensor k = oracle::matmul(h, layer.w_k.value());
    Tensor v = oracle::matmul(h, layer.w_v.value());
    Tensor scores = oracle::map(oracle::matmul(q, oracle::transpose(k)), [](double s) { return s / 2.0; });
    Tensor expected = oracle::matmul(oracle::softmax_rows(scores), v);
    CHECK(max_abs_diff(self_attention_layer(Var(h), layer).value(), expected) < 1e-14);
  }
}

TEST_CASE("feed_forward: dead and clipped ReLU give b2") {
  Rng rng(7);
  auto layer = random_layer(4, 6, rng);
  Tensor h = random_uniform(3, 4, 1.0, rng);
  auto expect_b2 = [&](const Tensor& out) {
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < out.cols(); ++c) CHECK(out(r, c) == layer.b2.value()(0, c));
  };
  {
    auto dead = layer;
    dead.w1 = zeros_param(4, 6);
    dead.b1 = zeros_param(1, 6);
    expect_b2(feed_forward(Var(h), dead).value());
  }
  {
    auto clipped = layer;
    clipped.w1 = zeros_param(4, 6);
    clipped.b1 = Var::parameter(Tensor(1, 6, -1.0));
    expect_b2(feed_forward(Var(h), clipped).value());
  }
}

TEST_CASE("feed_forward: matches hand composition") {
  Rng rng(8);
  auto layer = random_layer(4, 6, rng);
  Tensor h = random_uniform(3, 4, 1.0, rng);
  Tensor hidden = oracle::map(oracle::affine(h, layer.w1.value(), layer.b1.value()),
                              [](double v) { return v > 0 ? v : 0.0; });
  Tensor expected = oracle::affine(hidden, layer.w2.value(), layer.b2.value());
  CHECK(max_abs_diff(feed_forward(Var(h), layer).value(), expected) < 1e-14);
}

TEST_CASE("encode: depth 0 is the embedding, shape holds, seed fixes output") {
  const std::vector<std::size_t> tokens{1, 5, 9, 0, 3}, seg(5, 0);
  Rng r0(9);
  EncoderParams p0 = init_encoder(small_config(0), r0);
  CHECK(encode(p0, tokens, seg).value() == embed(p0.embeddings, tokens, seg).value());

  for (std::size_t depth : {1u, 3u}) {
    Rng a(10), b(10);
    EncoderParams pa = init_encoder(small_config(depth), a), pb = init_encoder(small_config(depth), b);
    Tensor ta = encode(pa, tokens, seg).value();
    CHECK(ta.rows() == 5);
    CHECK(ta.cols() == 4);
    CHECK(ta == encode(pb, tokens, seg).value());
  }
}

TEST_CASE("encode: one layer equals residual attention then residual feed-forward") {
  Rng rng(11);
  EncoderParams p = init_encoder(small_config(1), rng);
  const std::vector<std::size_t> tokens{2, 4, 6}, seg(3, 0);
  Var e = embed(p.embeddings, tokens, seg);
  Var after_attn = e + self_attention_layer(e, p.layers[0]);
  Var expected = after_attn + feed_forward(after_attn, p.layers[0]);
  CHECK(max_abs_diff(encode(p, tokens, seg).value(), expected.value()) < 1e-15);
}

TEST_CASE("encode: gradients pass central differences") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    EncoderParams p = init_encoder({6, 4, 5, 2, 6}, rng);
    ParamList params;
    collect_params(p, "encoder.", params);
    std::vector<std::size_t> tokens(4);
    for (auto& t : tokens) t = rng.below(6);
    const std::vector<std::size_t> seg(4, 0);
    Tensor w = random_uniform(4, 4, 1.0, rng);
    auto report = grad_check([&] { return sum(mul(encode(p, tokens, seg), Var(w))); }, params);
    INFO("seed " << seed << " worst " << report.worst().name);
    CHECK(report.max_rel_error() < 1e-4);
  }
}

}  // TEST_SUITE
