#include "him/geometry_graph.hpp"

#include <cmath>

namespace him::gd {

using ad::Var;

Var squash_normalize(Var s) {
  Var t = ad::vtanh(s);
  Var n = ad::l2norm(t);
  require(n.value().data[0] > 0.0, "squash_normalize: degenerate zero vector");
  Var one = s.tape()->constant_scalar(1.0);
  return ad::scale_by(t, ad::vdiv(one, n));
}

Var norm_scale(Var u, Var gamma, ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Euclidean: return u;
    case ManifoldKind::Poincare: return ad::scale_by(u, gamma);
    case ManifoldKind::Lorentz: return ad::scale_by(ad::clamp(u, -8.0, 8.0), gamma);
  }
  throw Error("bad ManifoldKind");
}

Var project_poincare(Var h, Var c) {
  Var sc = ad::vsqrt(c);
  Var z = ad::vdiv(ad::l2norm(h), sc);
  Var e = ad::scale_by(h, ad::tanhc(z));
  // keep strictly inside the open ball; correction treated as a constant
  double en = 0.0;
  for (double v : e.value().data) en += v * v;
  en = std::sqrt(en);
  double limit = std::sqrt(c.value().data[0]) * (1.0 - kBallMargin);
  if (en > limit) e = ad::scale(e, limit / en);
  return e;
}

Var project_lorentz(Var h, Var c) {
  Var sc = ad::vsqrt(c);
  Var z = ad::vdiv(ad::l2norm(h), sc);
  // radial saturation beyond kMaxLorentzZ, correction held constant
  if (z.value().data[0] > kMaxLorentzZ) {
    h = ad::scale(h, kMaxLorentzZ / z.value().data[0]);
    z = ad::vdiv(ad::l2norm(h), sc);
  }
  Var time = ad::mul(sc, ad::vcosh(z));
  Var space = ad::scale_by(h, ad::sinhc(z));
  return ad::concat1d(time, space);
}

Var poincare_distance(Var x, Var y, Var c) {
  Var sx = ad::sqnorm(x);
  Var sy = ad::sqnorm(y);
  double cval = c.value().data[0];
  require(sx.value().data[0] < cval && sy.value().data[0] < cval,
          "poincare_distance: point on or outside the ball");
  Var one = x.tape()->constant_scalar(1.0);
  Var dnx = ad::sub(one, ad::vdiv(sx, c));
  Var dny = ad::sub(one, ad::vdiv(sy, c));
  Var d2 = ad::vdiv(ad::sqnorm(ad::sub(x, y)), c);
  Var arg = ad::add_const(ad::vdiv(ad::scale(d2, 2.0), ad::mul(dnx, dny)), 1.0);
  return ad::mul(ad::vsqrt(c), ad::arcosh(arg));
}

Var lorentz_distance(Var x, Var y, Var c) {
  Var inner = ad::minkowski_dot(x, y);
  Var arg = ad::vdiv(ad::neg(inner), c);
  return ad::mul(ad::vsqrt(c), ad::arcosh(arg));
}

Var euclidean_distance(Var x, Var y) { return ad::l2norm(ad::sub(x, y)); }

Var manifold_distance(Var a, Var b, Var c, ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Euclidean: return euclidean_distance(a, b);
    case ManifoldKind::Poincare: return poincare_distance(a, b, c);
    case ManifoldKind::Lorentz: return lorentz_distance(a, b, c);
  }
  throw Error("bad ManifoldKind");
}

Var h_norm(Var e, Var c, ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Euclidean:
      return ad::l2norm(e);
    case ManifoldKind::Poincare: {
      Var origin = e.tape()->constant(Array::zeros(e.value().shape));
      return poincare_distance(e, origin, c);
    }
    case ManifoldKind::Lorentz: {
      // d(e, apex) = sqrt(c) arcosh(e0 / sqrt(c))
      Var e0 = ad::slice1d(e, 0, 1);
      Var sc = ad::vsqrt(c);
      return ad::mul(sc, ad::arcosh(ad::vdiv(e0, sc)));
    }
  }
  throw Error("bad ManifoldKind");
}

Var embed_pooled(Var pooled, Var gamma, Var c, ManifoldKind kind) {
  if (kind == ManifoldKind::Euclidean) return squash_normalize(pooled);
  Var h = norm_scale(ad::vtanh(pooled), gamma, kind);
  return kind == ManifoldKind::Poincare ? project_poincare(h, c) : project_lorentz(h, c);
}

}  // namespace him::gd
