#include "him/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace him {

ManifoldKind manifold_from_string(const std::string& s) {
  if (s == "euclidean") return ManifoldKind::Euclidean;
  if (s == "poincare") return ManifoldKind::Poincare;
  if (s == "lorentz") return ManifoldKind::Lorentz;
  throw Error("unknown manifold '" + s + "' (expected euclidean|poincare|lorentz)");
}

std::string to_string(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::Euclidean: return "euclidean";
    case ManifoldKind::Poincare: return "poincare";
    case ManifoldKind::Lorentz: return "lorentz";
  }
  throw Error("bad ManifoldKind");
}

namespace {

double sq_norm(Span x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double sq_dist(Span x, Span y) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double arcosh_clamped(double a) { return std::acosh(a < 1.0 ? 1.0 : a); }

}  // namespace

double minkowski_inner(Span x, Span y) {
  require(x.size() == y.size(), "minkowski_inner: length mismatch");
  require(x.size() >= 2, "minkowski_inner: need length >= 2");
  double s = -x[0] * y[0];
  for (size_t i = 1; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double poincare_distance(Span x, Span y, double c) {
  require(x.size() == y.size(), "poincare_distance: length mismatch");
  require(c > 0.0, "poincare_distance: c must be positive");
  double sx = sq_norm(x), sy = sq_norm(y);
  if (sx >= c || sy >= c)
    throw Error("poincare_distance: point on or outside the ball of radius sqrt(c)");
  // sqrt(c) times the unit-ball distance of x/sqrt(c), y/sqrt(c); the
  // squared separation carries the same 1/c scaling as the denominators,
  // which keeps the triangle inequality intact for every c
  double arg = 1.0 + 2.0 * (sq_dist(x, y) / c) / ((1.0 - sx / c) * (1.0 - sy / c));
  return std::sqrt(c) * arcosh_clamped(arg);
}

double lorentz_distance(Span x, Span y, double c) {
  require(c > 0.0, "lorentz_distance: c must be positive");
  require(x.size() == y.size(), "lorentz_distance: length mismatch");
  // identical points short-circuit: the quadratic-form cancellation would
  // otherwise surface as arcosh(1 + eps) ~ sqrt(eps) noise
  if (std::equal(x.begin(), x.end(), y.begin())) return 0.0;
  double inner = minkowski_inner(x, y);
  return std::sqrt(c) * arcosh_clamped(-inner / c);
}

double euclidean_distance(Span x, Span y) {
  require(x.size() == y.size(), "euclidean_distance: length mismatch");
  return std::sqrt(sq_dist(x, y));
}

std::pair<double, double> stable_cosh_sinh(double z) {
  if (std::fabs(z) < kSeriesCutoff) {
    double z2 = z * z;
    double ch = 1.0 + z2 / 2.0 + z2 * z2 / 24.0;
    double sh = z + z * z2 / 6.0 + z * z2 * z2 / 120.0;
    return {ch, sh};
  }
  return {std::cosh(z), std::sinh(z)};
}

double stable_sinhc(double z) {
  if (std::fabs(z) < kSeriesCutoff) {
    double z2 = z * z;
    return 1.0 + z2 / 6.0 + z2 * z2 / 120.0;
  }
  return std::sinh(z) / z;
}

double stable_tanhc(double z) {
  if (std::fabs(z) < kSeriesCutoff) {
    double z2 = z * z;
    return 1.0 - z2 / 3.0 + 2.0 * z2 * z2 / 15.0;
  }
  return std::tanh(z) / z;
}

Vec squash_normalize(Span s, bool* degenerate) {
  Vec u(s.size());
  double n2 = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    u[i] = std::tanh(s[i]);
    n2 += u[i] * u[i];
  }
  if (n2 == 0.0) {
    if (degenerate) *degenerate = true;
    return u;  // zero vector, maps to the origin downstream
  }
  if (degenerate) *degenerate = false;
  double inv = 1.0 / std::sqrt(n2);
  for (double& v : u) v *= inv;
  return u;
}

Vec norm_scale(Span u, double gamma, ManifoldKind kind) {
  Vec h(u.begin(), u.end());
  switch (kind) {
    case ManifoldKind::Euclidean:
      return h;
    case ManifoldKind::Poincare:
      for (double& v : h) v *= gamma;
      return h;
    case ManifoldKind::Lorentz:
      for (double& v : h) v = gamma * std::clamp(v, -8.0, 8.0);
      return h;
  }
  throw Error("bad ManifoldKind");
}

Vec project_poincare(Span h, double c) {
  require(c > 0.0, "project_poincare: c must be positive");
  double n = std::sqrt(sq_norm(h));
  double z = n / std::sqrt(c);
  // e = sqrt(c) tanh(z) h/||h|| == h * tanhc(z); exact origin at h = 0
  double f = stable_tanhc(z);
  Vec e(h.size());
  for (size_t i = 0; i < h.size(); ++i) e[i] = h[i] * f;
  // keep strictly inside the open ball
  double en = std::sqrt(sq_norm(e));
  double limit = std::sqrt(c) * (1.0 - kBallMargin);
  if (en > limit) {
    double r = limit / en;
    for (double& v : e) v *= r;
  }
  return e;
}

Vec project_lorentz(Span h, double c) {
  require(c > 0.0, "project_lorentz: c must be positive");
  double sc = std::sqrt(c);
  double n = std::sqrt(sq_norm(h));
  double z = n / sc;
  double radial = 1.0;
  if (z > kMaxLorentzZ) {
    radial = kMaxLorentzZ / z;
    z = kMaxLorentzZ;
  }
  auto [ch, sh] = stable_cosh_sinh(z);
  (void)sh;
  Vec e(h.size() + 1);
  e[0] = sc * ch;
  // sqrt(c) sinh(z) h/||h|| == h * sinhc(z); exact apex at h = 0
  double f = stable_sinhc(z) * radial;
  for (size_t i = 0; i < h.size(); ++i) e[i + 1] = h[i] * f;
  return e;
}

double h_norm(Span e, double c, ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Euclidean:
      return std::sqrt(sq_norm(e));
    case ManifoldKind::Poincare: {
      Vec origin(e.size(), 0.0);
      return poincare_distance(e, origin, c);
    }
    case ManifoldKind::Lorentz: {
      require(check_on_manifold(e, c, kind, 1e-3), "h_norm: invalid Lorentz point");
      // d(e, apex) = sqrt(c) * arcosh(e0 / sqrt(c))
      return std::sqrt(c) * arcosh_clamped(e[0] / std::sqrt(c));
    }
  }
  throw Error("bad ManifoldKind");
}

bool check_on_manifold(Span e, double c, ManifoldKind kind, double tol) {
  switch (kind) {
    case ManifoldKind::Euclidean:
      return true;
    case ManifoldKind::Poincare:
      return std::sqrt(sq_norm(e)) <= std::sqrt(c) * (1.0 - kBallMargin) * (1.0 + 1e-12);
    case ManifoldKind::Lorentz: {
      if (e.size() < 2 || e[0] <= 0.0) return false;
      return std::fabs(minkowski_inner(e, e) + c) <= tol;
    }
  }
  return false;
}

Vec stabilize_point(Span e, double c, ManifoldKind kind) {
  Vec out(e.begin(), e.end());
  switch (kind) {
    case ManifoldKind::Euclidean:
      return out;
    case ManifoldKind::Poincare: {
      double n = std::sqrt(sq_norm(e));
      double limit = std::sqrt(c) * (1.0 - kBallMargin);
      if (n > limit) {
        double r = limit / n;
        for (double& v : out) v *= r;
      }
      return out;
    }
    case ManifoldKind::Lorentz: {
      require(out.size() >= 2, "stabilize_point: Lorentz point too short");
      double ssq = 0.0;
      for (size_t i = 1; i < out.size(); ++i) ssq += out[i] * out[i];
      out[0] = std::sqrt(c + ssq);
      return out;
    }
  }
  throw Error("bad ManifoldKind");
}

double manifold_distance(Span a, Span b, double c, ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Euclidean: return euclidean_distance(a, b);
    case ManifoldKind::Poincare: return poincare_distance(a, b, c);
    case ManifoldKind::Lorentz: return lorentz_distance(a, b, c);
  }
  throw Error("bad ManifoldKind");
}

Vec manifold_origin(int space_dim, double c, ManifoldKind kind) {
  if (kind == ManifoldKind::Lorentz) {
    Vec o(space_dim + 1, 0.0);
    o[0] = std::sqrt(c);
    return o;
  }
  return Vec(space_dim, 0.0);
}

Vec embed_pooled(Span pooled, double gamma, double c, ManifoldKind kind) {
  if (kind == ManifoldKind::Euclidean) return squash_normalize(pooled);
  Vec squashed(pooled.size());
  for (size_t i = 0; i < pooled.size(); ++i) squashed[i] = std::tanh(pooled[i]);
  Vec h = norm_scale(squashed, gamma, kind);
  return kind == ManifoldKind::Poincare ? project_poincare(h, c) : project_lorentz(h, c);
}

}  // namespace him
