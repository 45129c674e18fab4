#include "him/objectives.hpp"

namespace him {

void LossConfig::validate() const {
  require(w_ce >= 0.0 && w_cl >= 0.0, "LossConfig: weights must be non-negative");
  require(alpha0 >= 0.0 && beta0 >= 0.0, "LossConfig: margins must be non-negative");
  require(temperature > 0.0, "LossConfig: temperature must be positive");
}

std::pair<ad::Var, ad::Var> dynamic_margins(ad::Var c, const LossConfig& cfg) {
  ad::Var sc = ad::vsqrt(c);
  return {ad::scale(sc, cfg.alpha0), ad::scale(sc, cfg.beta0)};
}

ad::Var centripetal_loss(std::span<const TripletVars> batch, ad::Var c, ManifoldKind kind,
                         ad::Var beta) {
  require(!batch.empty(), "centripetal_loss: empty batch");
  std::vector<ad::Var> terms;
  terms.reserve(batch.size());
  for (const auto& t : batch) {
    ad::Var np = gd::h_norm(t.pos, c, kind);
    ad::Var na = gd::h_norm(t.anchor, c, kind);
    terms.push_back(ad::relu(ad::add(ad::sub(np, na), beta)));
  }
  return ad::scale(ad::add_n(terms), 1.0 / static_cast<double>(batch.size()));
}

ad::Var clustering_loss(std::span<const TripletVars> batch, ad::Var c, ManifoldKind kind,
                        ad::Var alpha) {
  require(!batch.empty(), "clustering_loss: empty batch");
  std::vector<ad::Var> terms;
  terms.reserve(batch.size());
  for (const auto& t : batch) {
    ad::Var dp = gd::manifold_distance(t.anchor, t.pos, c, kind);
    ad::Var dn = gd::manifold_distance(t.anchor, t.neg, c, kind);
    terms.push_back(ad::relu(ad::add(ad::sub(dp, dn), alpha)));
  }
  return ad::scale(ad::add_n(terms), 1.0 / static_cast<double>(batch.size()));
}

ad::Var hyperbolic_loss(std::span<const TripletVars> batch, ad::Var c, ManifoldKind kind,
                        const LossConfig& cfg) {
  cfg.validate();
  auto [alpha, beta] = dynamic_margins(c, cfg);
  ad::Var centri = centripetal_loss(batch, c, kind, beta);
  ad::Var cluster = clustering_loss(batch, c, kind, alpha);
  return ad::add(ad::scale(centri, cfg.w_ce), ad::scale(cluster, cfg.w_cl));
}

ad::Var batch_contrastive_loss(std::span<const ad::Var> embeddings,
                               const std::vector<int>& partner, double temperature) {
  require(embeddings.size() >= 2, "batch_contrastive_loss: need at least one pair");
  require(partner.size() == embeddings.size(), "batch_contrastive_loss: partner size mismatch");
  require(temperature > 0.0, "batch_contrastive_loss: temperature must be positive");
  int n = static_cast<int>(embeddings.size());
  for (int i = 0; i < n; ++i)
    require(partner[i] >= 0 && partner[i] < n && partner[i] != i,
            "batch_contrastive_loss: every item needs a positive partner in the batch");
  std::vector<ad::Var> rows(embeddings.begin(), embeddings.end());
  ad::Var mat = ad::stack_rows(rows);
  ad::Var sim = ad::scale(ad::matmul_nt(mat, mat), 1.0 / temperature);
  return ad::row_softmax_ce(sim, partner);
}

}  // namespace him
