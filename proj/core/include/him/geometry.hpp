#ifndef HIM_GEOMETRY_HPP
#define HIM_GEOMETRY_HPP

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "him/array.hpp"

namespace him {

enum class ManifoldKind { Euclidean, Poincare, Lorentz };

ManifoldKind manifold_from_string(const std::string& s);
std::string to_string(ManifoldKind k);

/// Geometry selection and the two learnable geometry scalars.
/// Curvature K = -1/c, radius sqrt(c); c > 0 always. Euclidean mode
/// ignores both and never learns them.
struct ManifoldConfig {
  ManifoldKind kind = ManifoldKind::Poincare;
  double curvature_c = 1.0;
  bool learn_curvature = true;
  double gamma_init = 0.01;
  bool learn_gamma = true;
};

using Vec = std::vector<double>;
using Span = std::span<const double>;

/// Points are kept at ||e|| <= sqrt(c)*(1 - kBallMargin); the closed-form
/// distances keep their denominators bounded this way.
inline constexpr double kBallMargin = 1e-5;
inline constexpr double kHyperboloidTol = 1e-5;
inline constexpr double kSeriesCutoff = 1e-3;
inline constexpr double kCurvatureFloor = 1e-4;
/// Radial cap on z = ||h||/sqrt(c) for the hyperboloid projection. Beyond
/// z ~ 12 the Minkowski residual -e0^2 + ||space||^2 + c cannot be held
/// below 1e-5 in double precision (cosh^2 cancellation), so the map
/// saturates radially, like the open-ball margin on the Poincare side.
inline constexpr double kMaxLorentzZ = 10.0;

double minkowski_inner(Span x, Span y);
double poincare_distance(Span x, Span y, double c);
double lorentz_distance(Span x, Span y, double c);
double euclidean_distance(Span x, Span y);

/// (cosh z, sinh z) with truncated Maclaurin series below |z| < 1e-3.
std::pair<double, double> stable_cosh_sinh(double z);
double stable_sinhc(double z);  // sinh(z)/z, 1 at 0
double stable_tanhc(double z);  // tanh(z)/z, 1 at 0

/// tanh squash followed by L2 normalization. Unit norm unless the squashed
/// vector is exactly zero, in which case the zero vector is returned and
/// *degenerate set.
Vec squash_normalize(Span s, bool* degenerate = nullptr);

/// gamma * u (Poincare / Euclidean passthrough) or gamma * clamp(u,-8,8)
/// (Lorentz). Euclidean returns u unchanged.
Vec norm_scale(Span u, double gamma, ManifoldKind kind);

Vec project_poincare(Span h, double c);
Vec project_lorentz(Span h, double c);

/// Geodesic distance to the manifold origin.
double h_norm(Span e, double c, ManifoldKind kind);

bool check_on_manifold(Span e, double c, ManifoldKind kind, double tol = kHyperboloidTol);

/// Repairs numerical drift: Lorentz recomputes the time-like coordinate
/// from the space-like part, Poincare radially rescales into the open ball.
Vec stabilize_point(Span e, double c, ManifoldKind kind);

double manifold_distance(Span a, Span b, double c, ManifoldKind kind);

/// Origin point of the manifold: zero vector (Poincare/Euclidean) or the
/// hyperboloid apex (sqrt(c), 0, ..., 0).
Vec manifold_origin(int space_dim, double c, ManifoldKind kind);

/// Full squash -> scale -> project pipeline from a pooled encoder vector.
/// Hyperbolic manifolds use the tanh squash without unit normalization
/// (unit inputs would pin every h-norm to gamma); Euclidean uses the
/// unit-normalized squash and no gamma.
Vec embed_pooled(Span pooled, double gamma, double c, ManifoldKind kind);

}  // namespace him

#endif
