#include "him/model.hpp"

namespace him {

std::vector<int> HimModel::tokenize(const std::string& text, int* n_real) const {
  return vocab.tokenize(text, enc_cfg.max_len, n_real);
}

Array HimModel::pooled(const std::string& text) const {
  int n_real = 0;
  auto ids = tokenize(text, &n_real);
  require(n_real > 0, "cannot embed text with no known tokens: '" + text + "'");
  Encoder enc(enc_cfg);
  return enc.encode_eval(params, ids, n_real);
}

Vec HimModel::embed_text(const std::string& text) const {
  Array s = pooled(text);
  return embed_pooled(s.view(), gamma(), curvature(), manifold.kind);
}

HimModel build_model(const EncoderConfig& enc_cfg, const ManifoldConfig& manifold, Vocab vocab,
                     uint64_t seed) {
  require(manifold.curvature_c > 0.0, "build_model: curvature c must be positive");
  HimModel m;
  m.enc_cfg = enc_cfg;
  m.enc_cfg.vocab_size = vocab.size();
  m.manifold = manifold;
  m.vocab = std::move(vocab);

  bool hyper = manifold.kind != ManifoldKind::Euclidean;
  m.params.add("gamma", Array::scalar(manifold.gamma_init), hyper && manifold.learn_gamma, false);
  m.params.add("curvature", Array::scalar(manifold.curvature_c),
               hyper && manifold.learn_curvature, false);

  Rng rng(seed);
  Encoder enc(m.enc_cfg);
  enc.init_params(m.params, rng);
  m.params.quantize_f32();
  return m;
}

}  // namespace him
