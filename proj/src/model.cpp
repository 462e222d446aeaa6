#include "seqmark/model.hpp"

#include "seqmark/init.hpp"

namespace seqmark {

Model::Model(const ModelConfig& config) : config_(config) {}

Model Model::assemble(const ModelConfig& config) {
  config.validate();
  Model m(config);
  Rng rng(config.seed);

  EncoderConfig enc{config.vocab_size, config.d_model, config.d_ff,
                    config.use_encoder ? config.encoder_depth : 0, config.max_len};
  m.encoder_ = init_encoder(enc, rng);
  collect_params(m.encoder_, "encoder.", m.params_);

  if (config.extractor == Extractor::Mamba2) {
    m.bimamba_ = init_bimamba2(config.d_model, config.block(), rng);
    collect_params(*m.bimamba_, "extractor.", m.params_);
  } else {
    m.lstm_fc_in_w_ = init_uniform(config.d_model, config.d_adj, config.d_model, rng);
    m.lstm_fc_in_b_ = init_uniform(1, config.d_adj, config.d_model, rng);
    m.params_.push_back({"extractor.fc_in_w", m.lstm_fc_in_w_});
    m.params_.push_back({"extractor.fc_in_b", m.lstm_fc_in_b_});
    m.lstm_ = init_lstm(config.d_adj, config.d_output, rng);
    collect_params(*m.lstm_, "extractor.lstm.", m.params_);
  }

  if (!config.use_attention_fusion) {
    m.concat_w_ = init_uniform(2 * config.d_output, config.d_output, 2 * config.d_output, rng);
    m.concat_b_ = init_uniform(1, config.d_output, 2 * config.d_output, rng);
    m.params_.push_back({"fusion.concat_w", m.concat_w_});
    m.params_.push_back({"fusion.concat_b", m.concat_b_});
  }

  if (config.use_skip_connection) {
    m.skip_ = init_skipnet(config.d_output, config.skip_h1, config.skip_h2, rng);
    collect_params(*m.skip_, "head.", m.params_);
  } else {
    m.direct_ = init_direct_head(config.d_output, rng);
    collect_params(*m.direct_, "head.", m.params_);
  }

  if (config.use_crf) {
    m.crf_ = init_crf(rng);
    collect_params(*m.crf_, "crf.", m.params_);
  }
  return m;
}

Var Model::features(std::span<const std::size_t> tokens) const {
  if (tokens.empty()) throw DimensionError("empty token sequence");
  const std::vector<std::size_t> segments(tokens.size(), 0);
  Var t = encode(encoder_, tokens, segments);
  DirectionalOutputs streams;
  if (bimamba_) {
    streams = bidirectional_pass(fc_in(t, bimamba_->fc_in_w, bimamba_->fc_in_b), *bimamba_);
  } else {
    streams = bilstm_extractor(fc_in(t, lstm_fc_in_w_, lstm_fc_in_b_), *lstm_);
  }
  if (config_.use_attention_fusion) return dot_product_fusion(streams.forward, streams.backward);
  return linear(concat_cols(streams.forward, streams.backward), concat_w_, concat_b_);
}

Var Model::emissions(std::span<const std::size_t> tokens) const {
  Var o = features(tokens);
  return skip_ ? skip_projection(o, *skip_) : direct_projection(o, *direct_);
}

Var Model::loss_from_emissions(const Var& em, std::span<const std::size_t> gold) const {
  return crf_ ? crf_nll(em, gold, *crf_) : token_ce_loss(em, gold);
}

Var Model::loss(std::span<const std::size_t> tokens, std::span<const std::size_t> gold) const {
  return loss_from_emissions(emissions(tokens), gold);
}

std::vector<std::size_t> Model::decode_emissions(const Tensor& em) const {
  return crf_ ? viterbi_decode(em, *crf_, config_.constrained_decoding) : argmax_decode(em);
}

std::vector<std::size_t> Model::decode(std::span<const std::size_t> tokens) const {
  NoGradGuard no_grad;
  return decode_emissions(emissions(tokens).value());
}

Model Model::clone() const {
  Model m = assemble(config_);
  m.restore(snapshot());
  return m;
}

std::vector<Tensor> Model::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.var.value());
  return out;
}

void Model::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) {
    throw DimensionError("restore: " + std::to_string(values.size()) + " tensors for " +
                         std::to_string(params_.size()) + " parameters");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    Var v = params_[i].var;
    if (!v.value().same_shape(values[i])) {
      throw DimensionError("restore: " + params_[i].name + " expects " + shape_string(v.shape()) +
                           ", got " + shape_string(values[i].shape()));
    }
    v.mutable_value() = values[i];
  }
}

}  // namespace seqmark
