#ifndef HIM_AUTOGRAD_HPP
#define HIM_AUTOGRAD_HPP

#include <functional>
#include <utility>
#include <vector>

#include "him/array.hpp"
#include "him/rng.hpp"

namespace him::ad {

class Tape;

/// Lightweight handle to a node on a tape.
class Var {
 public:
  Var() = default;
  const Array& value() const;
  /// Accumulated gradient; zeros if backward never touched this node.
  const Array& grad() const;
  bool requires_grad() const;
  bool defined() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int index() const { return idx_; }

 private:
  friend class Tape;
  Var(Tape* t, int i) : tape_(t), idx_(i) {}
  Tape* tape_ = nullptr;
  int idx_ = -1;
};

/// Backward rule: reads this node's grad/value from the tape and
/// accumulates into the parents' grads.
using BackwardFn = std::function<void(Tape&, int)>;

/// Records primitive applications in topological (creation) order.
/// Single-threaded; cleared between optimization steps.
class Tape {
 public:
  Var leaf(Array value, bool requires_grad = false);
  Var constant(Array value) { return leaf(std::move(value), false); }
  Var constant_scalar(double v) { return leaf(Array::scalar(v), false); }

  /// Records an op node. Backward may be empty when no parent needs grads.
  Var record(Array value, std::vector<int> parents, BackwardFn back);

  /// Reverse sweep from a scalar loss; accumulation is additive across
  /// fan-out. Throws if loss is not a scalar on this tape.
  void backward(const Var& loss);

  const Array& value_of(int idx) const { return nodes_[idx].value; }
  Array& grad_of(int idx);
  bool node_requires_grad(int idx) const { return nodes_[idx].requires_grad; }
  bool any_requires_grad(const std::vector<int>& idxs) const;

  size_t size() const { return nodes_.size(); }
  void clear();

 private:
  friend class Var;
  struct Node {
    Array value;
    Array grad;  // lazily sized
    bool requires_grad = false;
    bool grad_ready = false;
    std::vector<int> parents;
    BackwardFn back;
  };
  std::vector<Node> nodes_;
};

// ---- elementwise arithmetic (same shape unless noted) ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var vdiv(Var a, Var b);
Var neg(Var a);
Var add_const(Var a, double k);
Var scale(Var a, double k);
Var square(Var a);

// ---- broadcasts ----
Var add_scalar(Var a, Var s);   // s has 1 element
Var scale_by(Var a, Var s);     // a * s, s has 1 element
Var add_rowvec(Var m, Var v);   // [R,C] + [C] per row

// ---- linear algebra ----
Var matmul(Var a, Var b);       // [m,k] x [k,n]
Var matmul_nt(Var a, Var b);    // [m,k] x [n,k]^T -> [m,n]
Var matvec(Var a, Var v);       // [m,k] x [k] -> [m]
Var dot(Var a, Var b);          // rank-1 -> scalar
Var minkowski_dot(Var a, Var b);  // -a0*b0 + sum_i ai*bi -> scalar
Var sqnorm(Var a);              // sum of squares -> scalar
Var l2norm(Var a);              // sqrt(sqnorm); gradient 0 at the origin

// ---- shape ----
Var concat1d(Var a, Var b);
Var slice1d(Var v, int begin, int len);
Var hcat(Var a, Var b);                        // [R,C1] | [R,C2]
std::pair<Var, Var> split_cols(Var m, int left_cols);
Var stack_rows(const std::vector<Var>& rows);  // n x [C] -> [n,C]

// ---- reductions ----
Var sum(Var a);
Var mean_all(Var a);
Var mean_rows(Var m);  // [R,C] -> [C], mean over axis 0
Var add_n(const std::vector<Var>& xs);

// ---- elementwise nonlinearities ----
Var vtanh(Var a);
Var vsigmoid(Var a);
Var silu(Var a);
Var vsqrt(Var a);
Var vcosh(Var a);   // Maclaurin branch below the series cutoff
Var vsinh(Var a);
Var sinhc(Var a);   // sinh(z)/z, series near zero, 1 at zero
Var tanhc(Var a);   // tanh(z)/z, series near zero, 1 at zero
Var arcosh(Var a);  // argument clamped to >= 1; gradient 0 when clamped
Var relu(Var a);    // hinge; subgradient 0 at the kink
Var clamp(Var a, double lo, double hi);  // boundary counts as inside

/// Custom elementwise op; also the extension point used by the
/// broken-gradient negative-control test.
Var elementwise(Var a, double (*f)(double), double (*df)(double));

// ---- structured ops ----
Var rmsnorm(Var x, Var gain, double eps = 1e-6);          // last axis
Var depthwise_conv(Var x, Var kernel);                    // causal, kernel[lag][ch]
Var ssm_scan(Var a, Var b_seq, Var c_seq, Var u);         // [L],[L,N],[L,N],[L,C]
Var embedding_lookup(Var table, std::vector<int> ids);    // rows of [V,D]
Var dropout(Var x, double p, Rng& rng, bool train);
Var dropout_with_mask(Var x, Array mask);                 // mask pre-scaled by 1/(1-p)
/// Mean cross-entropy over rows of a similarity matrix; targets[i] is the
/// positive column of row i; the diagonal is masked out.
Var row_softmax_ce(Var sim, std::vector<int> targets);

/// Max over coordinates of |analytic - central difference| / (|cd| + 1e-8).
/// f builds a fresh scalar graph from a leaf holding x. NaN anywhere
/// propagates into the returned error. When max_coords > 0 only that many
/// coordinates are probed (deterministic stride subsample).
double finite_difference_check(const std::function<Var(Tape&, Var)>& f,
                               const Array& x, double step,
                               int max_coords = -1);

}  // namespace him::ad

#endif
