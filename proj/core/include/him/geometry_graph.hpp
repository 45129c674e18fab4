#ifndef HIM_GEOMETRY_GRAPH_HPP
#define HIM_GEOMETRY_GRAPH_HPP

#include "him/autograd.hpp"
#include "him/geometry.hpp"

// Differentiable counterparts of the geometry module: the same formulas
// composed from autograd primitives so that losses propagate into the
// encoder and into the gamma / curvature scalars. Forward values agree
// with the plain functions; tests compare both routes.
namespace him::gd {

/// tanh squash + L2 normalize (unit sphere), used by contrastive
/// pretraining and the Euclidean baseline.
ad::Var squash_normalize(ad::Var s);

ad::Var norm_scale(ad::Var u, ad::Var gamma, ManifoldKind kind);

ad::Var project_poincare(ad::Var h, ad::Var c);    // [D] -> [D]
ad::Var project_lorentz(ad::Var h, ad::Var c);     // [D] -> [D+1]

ad::Var poincare_distance(ad::Var x, ad::Var y, ad::Var c);
ad::Var lorentz_distance(ad::Var x, ad::Var y, ad::Var c);
ad::Var euclidean_distance(ad::Var x, ad::Var y);
ad::Var manifold_distance(ad::Var a, ad::Var b, ad::Var c, ManifoldKind kind);

ad::Var h_norm(ad::Var e, ad::Var c, ManifoldKind kind);

/// pooled encoder vector -> manifold point (squash, scale, project).
ad::Var embed_pooled(ad::Var pooled, ad::Var gamma, ad::Var c, ManifoldKind kind);

}  // namespace him::gd

#endif
