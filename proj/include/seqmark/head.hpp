#pragma once

#include <string>

#include "seqmark/autodiff.hpp"
#include "seqmark/optim.hpp"

namespace seqmark {

/// Emission head with a skip connection: the second hidden layer sees the
/// raw features concatenated with the first hidden layer's output.
struct SkipNetParams {
  Var layer1_w, layer1_b;  // d × h1
  Var layer2_w, layer2_b;  // (d + h1) × h2
  Var out_w, out_b;        // h2 × 3
};

/// Single affine map d → 3 (the head without the skip network).
struct DirectHeadParams {
  Var w, b;
};

SkipNetParams init_skipnet(std::size_t d, std::size_t h1, std::size_t h2, Rng& rng);
DirectHeadParams init_direct_head(std::size_t d, Rng& rng);
void collect_params(const SkipNetParams& p, const std::string& prefix, ParamList& out);
void collect_params(const DirectHeadParams& p, const std::string& prefix, ParamList& out);

/// x1 = SiLU(O·W1 + b1); x2 = SiLU([O, x1]·W2 + b2); emissions = x2·W3 + b3.
Var skip_projection(const Var& features, const SkipNetParams& p);
Var direct_projection(const Var& features, const DirectHeadParams& p);

}  // namespace seqmark
