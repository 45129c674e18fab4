#ifndef HIM_OBJECTIVES_HPP
#define HIM_OBJECTIVES_HPP

#include <span>
#include <utility>
#include <vector>

#include "him/geometry_graph.hpp"

namespace him {

/// Loss weights and base margins; the effective margins scale with the
/// manifold radius sqrt(c). alpha0 > beta0: the clustering margin is
/// intentionally the larger one.
struct LossConfig {
  double w_ce = 1.0;   // centripetal weight
  double w_cl = 1.0;   // clustering weight
  double alpha0 = 1.0;
  double beta0 = 0.1;
  double temperature = 0.05;  // pretraining contrastive
  void validate() const;
};

/// Manifold points of one training triple.
struct TripletVars {
  ad::Var anchor;
  ad::Var pos;
  ad::Var neg;
};

/// (alpha, beta) = (alpha0, beta0) * sqrt(c).
std::pair<ad::Var, ad::Var> dynamic_margins(ad::Var c, const LossConfig& cfg);

/// mean over the batch of max(||e+||_c - ||e||_c + beta, 0).
ad::Var centripetal_loss(std::span<const TripletVars> batch, ad::Var c, ManifoldKind kind,
                         ad::Var beta);

/// mean over the batch of max(d(e,e+) - d(e,e-) + alpha, 0).
ad::Var clustering_loss(std::span<const TripletVars> batch, ad::Var c, ManifoldKind kind,
                        ad::Var alpha);

/// w_ce * centripetal + w_cl * clustering with margins from the current c.
ad::Var hyperbolic_loss(std::span<const TripletVars> batch, ad::Var c, ManifoldKind kind,
                        const LossConfig& cfg);

/// In-batch softmax contrastive loss over unit-norm embeddings.
/// partner[i] is the index of i's positive; rows are cross-entropy over
/// cosine similarities / temperature with the diagonal masked.
ad::Var batch_contrastive_loss(std::span<const ad::Var> embeddings,
                               const std::vector<int>& partner, double temperature);

}  // namespace him

#endif
