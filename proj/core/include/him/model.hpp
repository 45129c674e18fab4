#ifndef HIM_MODEL_HPP
#define HIM_MODEL_HPP

#include <string>

#include "him/encoder.hpp"
#include "him/geometry.hpp"
#include "him/vocab.hpp"

namespace him {

/// Everything needed to embed text on the configured manifold: encoder
/// dims, vocabulary, parameters (including the "gamma" and "curvature"
/// scalars) and the manifold choice.
struct HimModel {
  EncoderConfig enc_cfg;
  ManifoldConfig manifold;
  Vocab vocab;
  ParamStore params;

  double curvature() const { return params.at("curvature").data[0]; }
  double gamma() const { return params.at("gamma").data[0]; }

  std::vector<int> tokenize(const std::string& text, int* n_real) const;

  /// Pooled encoder vector for a text (no gradients).
  Array pooled(const std::string& text) const;

  /// Manifold point for a text: squash, scale, project.
  Vec embed_text(const std::string& text) const;
};

/// Fresh model: gamma/curvature scalars first (trainable only in
/// hyperbolic mode), then Kaiming-initialized encoder parameters. The
/// store is f32-quantized so the initial state round-trips checkpoints
/// bit-exactly.
HimModel build_model(const EncoderConfig& enc_cfg, const ManifoldConfig& manifold, Vocab vocab,
                     uint64_t seed);

}  // namespace him

#endif
