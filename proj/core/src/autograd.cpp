#include "him/autograd.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>

namespace him::ad {

namespace {

constexpr double kSeriesCutoff = 1e-3;

double stable_cosh(double z) {
  if (std::fabs(z) < kSeriesCutoff) {
    double z2 = z * z;
    return 1.0 + z2 / 2.0 + z2 * z2 / 24.0;
  }
  return std::cosh(z);
}

double stable_sinh(double z) {
  if (std::fabs(z) < kSeriesCutoff) {
    double z2 = z * z;
    return z * (1.0 + z2 / 6.0 + z2 * z2 / 120.0);
  }
  return std::sinh(z);
}

double stable_sinhc(double z) {
  if (std::fabs(z) < kSeriesCutoff) {
    double z2 = z * z;
    return 1.0 + z2 / 6.0 + z2 * z2 / 120.0;
  }
  return std::sinh(z) / z;
}

double stable_sinhc_d(double z) {
  if (std::fabs(z) < kSeriesCutoff) {
    double z2 = z * z;
    return z / 3.0 + z * z2 / 30.0 + z * z2 * z2 / 840.0;
  }
  return (z * std::cosh(z) - std::sinh(z)) / (z * z);
}

double stable_tanhc(double z) {
  if (std::fabs(z) < kSeriesCutoff) {
    double z2 = z * z;
    return 1.0 - z2 / 3.0 + 2.0 * z2 * z2 / 15.0;
  }
  return std::tanh(z) / z;
}

double stable_tanhc_d(double z) {
  if (std::fabs(z) < kSeriesCutoff) {
    double z2 = z * z;
    return -2.0 * z / 3.0 + 8.0 * z * z2 / 15.0 - 34.0 * z * z2 * z2 / 105.0;
  }
  double t = std::tanh(z);
  return (z * (1.0 - t * t) - t) / (z * z);
}

void check_same_tape(const Var& a, const Var& b, const char* op) {
  require(a.defined() && b.defined() && a.tape() == b.tape(),
          std::string(op) + ": operands must live on the same tape");
}

}  // namespace

const Array& Var::value() const {
  require(defined(), "Var::value on undefined handle");
  return tape_->value_of(idx_);
}

const Array& Var::grad() const {
  require(defined(), "Var::grad on undefined handle");
  return const_cast<Tape*>(tape_)->grad_of(idx_);
}

bool Var::requires_grad() const { return defined() && tape_->node_requires_grad(idx_); }

Var Tape::leaf(Array value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Array value, std::vector<int> parents, BackwardFn back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = any_requires_grad(parents);
  n.parents = std::move(parents);
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

bool Tape::any_requires_grad(const std::vector<int>& idxs) const {
  for (int i : idxs)
    if (nodes_[i].requires_grad) return true;
  return false;
}

Array& Tape::grad_of(int idx) {
  Node& n = nodes_[idx];
  if (!n.grad_ready) {
    n.grad = Array::zeros(n.value.shape);
    n.grad_ready = true;
  }
  return n.grad;
}

void Tape::backward(const Var& loss) {
  require(loss.defined() && loss.tape() == this, "backward: loss not on this tape");
  require(loss.value().numel() == 1, "backward: loss must be scalar");
  grad_of(loss.index()).data[0] = 1.0;
  for (int i = loss.index(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad_ready && n.requires_grad && n.back) n.back(*this, i);
  }
}

void Tape::clear() { nodes_.clear(); }

// ---------------------------------------------------------------------------
// elementwise arithmetic

Var add(Var a, Var b) {
  check_same_tape(a, b, "add");
  require(a.value().same_shape(b.value()), "add: shape mismatch");
  Array out = a.value();
  const Array& bv = b.value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  int ia = a.index(), ib = b.index();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& ga = t.grad_of(ia);
    Array& gb = t.grad_of(ib);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] += g.data[i];
    }
  });
}

Var sub(Var a, Var b) {
  check_same_tape(a, b, "sub");
  require(a.value().same_shape(b.value()), "sub: shape mismatch");
  Array out = a.value();
  const Array& bv = b.value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
  int ia = a.index(), ib = b.index();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& ga = t.grad_of(ia);
    Array& gb = t.grad_of(ib);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] -= g.data[i];
    }
  });
}

Var mul(Var a, Var b) {
  check_same_tape(a, b, "mul");
  require(a.value().same_shape(b.value()), "mul: shape mismatch");
  Array out = a.value();
  const Array& bv = b.value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  int ia = a.index(), ib = b.index();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    const Array& av = t.value_of(ia);
    const Array& bv2 = t.value_of(ib);
    Array& ga = t.grad_of(ia);
    Array& gb = t.grad_of(ib);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i] * bv2.data[i];
      gb.data[i] += g.data[i] * av.data[i];
    }
  });
}

Var vdiv(Var a, Var b) {
  check_same_tape(a, b, "vdiv");
  require(a.value().same_shape(b.value()), "vdiv: shape mismatch");
  Array out = a.value();
  const Array& bv = b.value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] /= bv.data[i];
  int ia = a.index(), ib = b.index();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    const Array& av = t.value_of(ia);
    const Array& bv2 = t.value_of(ib);
    Array& ga = t.grad_of(ia);
    Array& gb = t.grad_of(ib);
    for (size_t i = 0; i < g.data.size(); ++i) {
      double inv = 1.0 / bv2.data[i];
      ga.data[i] += g.data[i] * inv;
      gb.data[i] -= g.data[i] * av.data[i] * inv * inv;
    }
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var add_const(Var a, double k) {
  Array out = a.value();
  for (double& x : out.data) x += k;
  int ia = a.index();
  return a.tape()->record(std::move(out), {ia}, [ia](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& ga = t.grad_of(ia);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
  });
}

Var scale(Var a, double k) {
  Array out = a.value();
  for (double& x : out.data) x *= k;
  int ia = a.index();
  return a.tape()->record(std::move(out), {ia}, [ia, k](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& ga = t.grad_of(ia);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += k * g.data[i];
  });
}

Var square(Var a) {
  Array out = a.value();
  for (double& x : out.data) x *= x;
  int ia = a.index();
  return a.tape()->record(std::move(out), {ia}, [ia](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    const Array& av = t.value_of(ia);
    Array& ga = t.grad_of(ia);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += 2.0 * av.data[i] * g.data[i];
  });
}

// ---------------------------------------------------------------------------
// broadcasts

Var add_scalar(Var a, Var s) {
  check_same_tape(a, s, "add_scalar");
  require(s.value().numel() == 1, "add_scalar: s must have one element");
  Array out = a.value();
  double sv = s.value().data[0];
  for (double& x : out.data) x += sv;
  int ia = a.index(), is = s.index();
  return a.tape()->record(std::move(out), {ia, is}, [ia, is](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& ga = t.grad_of(ia);
    Array& gs = t.grad_of(is);
    double acc = 0.0;
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i];
      acc += g.data[i];
    }
    gs.data[0] += acc;
  });
}

Var scale_by(Var a, Var s) {
  check_same_tape(a, s, "scale_by");
  require(s.value().numel() == 1, "scale_by: s must have one element");
  Array out = a.value();
  double sv = s.value().data[0];
  for (double& x : out.data) x *= sv;
  int ia = a.index(), is = s.index();
  return a.tape()->record(std::move(out), {ia, is}, [ia, is](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    const Array& av = t.value_of(ia);
    double sv2 = t.value_of(is).data[0];
    Array& ga = t.grad_of(ia);
    Array& gs = t.grad_of(is);
    double acc = 0.0;
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += sv2 * g.data[i];
      acc += g.data[i] * av.data[i];
    }
    gs.data[0] += acc;
  });
}

Var add_rowvec(Var m, Var v) {
  check_same_tape(m, v, "add_rowvec");
  const Array& mv = m.value();
  const Array& vv = v.value();
  require(mv.rank() == 2 && vv.rank() == 1 && mv.cols() == vv.shape[0],
          "add_rowvec: want [R,C] + [C]");
  Array out = mv;
  int R = mv.rows(), C = mv.cols();
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) out.data[static_cast<size_t>(r) * C + c] += vv.data[c];
  int im = m.index(), iv = v.index();
  return m.tape()->record(std::move(out), {im, iv}, [im, iv, R, C](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& gm = t.grad_of(im);
    Array& gv = t.grad_of(iv);
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < C; ++c) {
        double gd = g.data[static_cast<size_t>(r) * C + c];
        gm.data[static_cast<size_t>(r) * C + c] += gd;
        gv.data[c] += gd;
      }
  });
}

// ---------------------------------------------------------------------------
// linear algebra

Var matmul(Var a, Var b) {
  check_same_tape(a, b, "matmul");
  const Array& av = a.value();
  const Array& bv = b.value();
  require(av.rank() == 2 && bv.rank() == 2 && av.cols() == bv.rows(),
          "matmul: shape mismatch " + shape_str(av.shape) + " x " + shape_str(bv.shape));
  int M = av.rows(), K = av.cols(), N = bv.cols();
  Array out({M, N});
  for (int i = 0; i < M; ++i) {
    const double* arow = &av.data[static_cast<size_t>(i) * K];
    double* orow = &out.data[static_cast<size_t>(i) * N];
    for (int k = 0; k < K; ++k) {
      double aik = arow[k];
      const double* brow = &bv.data[static_cast<size_t>(k) * N];
      for (int j = 0; j < N; ++j) orow[j] += aik * brow[j];
    }
  }
  int ia = a.index(), ib = b.index();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib, M, K, N](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    if (t.node_requires_grad(ia)) {
      const Array& bv2 = t.value_of(ib);
      Array& ga = t.grad_of(ia);
      // dA = G * B^T
      for (int i = 0; i < M; ++i) {
        const double* grow = &g.data[static_cast<size_t>(i) * N];
        double* garow = &ga.data[static_cast<size_t>(i) * K];
        for (int k = 0; k < K; ++k) {
          const double* brow = &bv2.data[static_cast<size_t>(k) * N];
          double acc = 0.0;
          for (int j = 0; j < N; ++j) acc += grow[j] * brow[j];
          garow[k] += acc;
        }
      }
    }
    if (t.node_requires_grad(ib)) {
      const Array& av2 = t.value_of(ia);
      Array& gb = t.grad_of(ib);
      // dB = A^T * G
      for (int i = 0; i < M; ++i) {
        const double* arow = &av2.data[static_cast<size_t>(i) * K];
        const double* grow = &g.data[static_cast<size_t>(i) * N];
        for (int k = 0; k < K; ++k) {
          double aik = arow[k];
          double* gbrow = &gb.data[static_cast<size_t>(k) * N];
          for (int j = 0; j < N; ++j) gbrow[j] += aik * grow[j];
        }
      }
    }
  });
}

Var matmul_nt(Var a, Var b) {
  check_same_tape(a, b, "matmul_nt");
  const Array& av = a.value();
  const Array& bv = b.value();
  require(av.rank() == 2 && bv.rank() == 2 && av.cols() == bv.cols(),
          "matmul_nt: shape mismatch " + shape_str(av.shape) + " x " + shape_str(bv.shape) + "^T");
  int M = av.rows(), K = av.cols(), N = bv.rows();
  Array out({M, N});
  for (int i = 0; i < M; ++i) {
    const double* arow = &av.data[static_cast<size_t>(i) * K];
    double* orow = &out.data[static_cast<size_t>(i) * N];
    for (int j = 0; j < N; ++j) {
      const double* brow = &bv.data[static_cast<size_t>(j) * K];
      double acc = 0.0;
      for (int k = 0; k < K; ++k) acc += arow[k] * brow[k];
      orow[j] = acc;
    }
  }
  int ia = a.index(), ib = b.index();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib, M, K, N](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    if (t.node_requires_grad(ia)) {
      const Array& bv2 = t.value_of(ib);
      Array& ga = t.grad_of(ia);
      // dA = G * B
      for (int i = 0; i < M; ++i) {
        const double* grow = &g.data[static_cast<size_t>(i) * N];
        double* garow = &ga.data[static_cast<size_t>(i) * K];
        for (int j = 0; j < N; ++j) {
          double gij = grow[j];
          const double* brow = &bv2.data[static_cast<size_t>(j) * K];
          for (int k = 0; k < K; ++k) garow[k] += gij * brow[k];
        }
      }
    }
    if (t.node_requires_grad(ib)) {
      const Array& av2 = t.value_of(ia);
      Array& gb = t.grad_of(ib);
      // dB = G^T * A
      for (int i = 0; i < M; ++i) {
        const double* grow = &g.data[static_cast<size_t>(i) * N];
        const double* arow = &av2.data[static_cast<size_t>(i) * K];
        for (int j = 0; j < N; ++j) {
          double gij = grow[j];
          double* gbrow = &gb.data[static_cast<size_t>(j) * K];
          for (int k = 0; k < K; ++k) gbrow[k] += gij * arow[k];
        }
      }
    }
  });
}

Var matvec(Var a, Var v) {
  check_same_tape(a, v, "matvec");
  const Array& av = a.value();
  const Array& vv = v.value();
  require(av.rank() == 2 && vv.rank() == 1 && av.cols() == vv.shape[0],
          "matvec: shape mismatch");
  int M = av.rows(), K = av.cols();
  Array out({M});
  for (int i = 0; i < M; ++i) {
    const double* arow = &av.data[static_cast<size_t>(i) * K];
    double acc = 0.0;
    for (int k = 0; k < K; ++k) acc += arow[k] * vv.data[k];
    out.data[i] = acc;
  }
  int ia = a.index(), iv = v.index();
  return a.tape()->record(std::move(out), {ia, iv}, [ia, iv, M, K](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    if (t.node_requires_grad(ia)) {
      const Array& vv2 = t.value_of(iv);
      Array& ga = t.grad_of(ia);
      for (int i = 0; i < M; ++i) {
        double gi = g.data[i];
        double* garow = &ga.data[static_cast<size_t>(i) * K];
        for (int k = 0; k < K; ++k) garow[k] += gi * vv2.data[k];
      }
    }
    if (t.node_requires_grad(iv)) {
      const Array& av2 = t.value_of(ia);
      Array& gv = t.grad_of(iv);
      for (int i = 0; i < M; ++i) {
        double gi = g.data[i];
        const double* arow = &av2.data[static_cast<size_t>(i) * K];
        for (int k = 0; k < K; ++k) gv.data[k] += gi * arow[k];
      }
    }
  });
}

Var dot(Var a, Var b) {
  check_same_tape(a, b, "dot");
  require(a.value().same_shape(b.value()) && a.value().rank() == 1, "dot: want equal rank-1 shapes");
  const Array& av = a.value();
  const Array& bv = b.value();
  double acc = 0.0;
  for (size_t i = 0; i < av.data.size(); ++i) acc += av.data[i] * bv.data[i];
  int ia = a.index(), ib = b.index();
  return a.tape()->record(Array::scalar(acc), {ia, ib}, [ia, ib](Tape& t, int self) {
    double g = t.grad_of(self).data[0];
    const Array& av2 = t.value_of(ia);
    const Array& bv2 = t.value_of(ib);
    Array& ga = t.grad_of(ia);
    Array& gb = t.grad_of(ib);
    for (size_t i = 0; i < av2.data.size(); ++i) {
      ga.data[i] += g * bv2.data[i];
      gb.data[i] += g * av2.data[i];
    }
  });
}

Var minkowski_dot(Var a, Var b) {
  check_same_tape(a, b, "minkowski_dot");
  const Array& av = a.value();
  const Array& bv = b.value();
  require(av.same_shape(bv) && av.rank() == 1 && av.numel() >= 2,
          "minkowski_dot: want equal rank-1 shapes of length >= 2");
  double acc = -av.data[0] * bv.data[0];
  for (size_t i = 1; i < av.data.size(); ++i) acc += av.data[i] * bv.data[i];
  int ia = a.index(), ib = b.index();
  return a.tape()->record(Array::scalar(acc), {ia, ib}, [ia, ib](Tape& t, int self) {
    double g = t.grad_of(self).data[0];
    const Array& av2 = t.value_of(ia);
    const Array& bv2 = t.value_of(ib);
    Array& ga = t.grad_of(ia);
    Array& gb = t.grad_of(ib);
    ga.data[0] -= g * bv2.data[0];
    gb.data[0] -= g * av2.data[0];
    for (size_t i = 1; i < av2.data.size(); ++i) {
      ga.data[i] += g * bv2.data[i];
      gb.data[i] += g * av2.data[i];
    }
  });
}

Var sqnorm(Var a) {
  const Array& av = a.value();
  double acc = 0.0;
  for (double x : av.data) acc += x * x;
  int ia = a.index();
  return a.tape()->record(Array::scalar(acc), {ia}, [ia](Tape& t, int self) {
    double g = t.grad_of(self).data[0];
    const Array& av2 = t.value_of(ia);
    Array& ga = t.grad_of(ia);
    for (size_t i = 0; i < av2.data.size(); ++i) ga.data[i] += 2.0 * g * av2.data[i];
  });
}

Var l2norm(Var a) {
  const Array& av = a.value();
  double acc = 0.0;
  for (double x : av.data) acc += x * x;
  double n = std::sqrt(acc);
  int ia = a.index();
  return a.tape()->record(Array::scalar(n), {ia}, [ia, n](Tape& t, int self) {
    if (n == 0.0) return;  // subgradient 0 at the origin
    double g = t.grad_of(self).data[0];
    const Array& av2 = t.value_of(ia);
    Array& ga = t.grad_of(ia);
    for (size_t i = 0; i < av2.data.size(); ++i) ga.data[i] += g * av2.data[i] / n;
  });
}

// ---------------------------------------------------------------------------
// shape ops

Var concat1d(Var a, Var b) {
  check_same_tape(a, b, "concat1d");
  require(a.value().rank() == 1 && b.value().rank() == 1, "concat1d: want rank-1");
  const Array& av = a.value();
  const Array& bv = b.value();
  int na = av.shape[0], nb = bv.shape[0];
  Array out({na + nb});
  std::memcpy(out.data.data(), av.data.data(), sizeof(double) * na);
  std::memcpy(out.data.data() + na, bv.data.data(), sizeof(double) * nb);
  int ia = a.index(), ib = b.index();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib, na, nb](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& ga = t.grad_of(ia);
    Array& gb = t.grad_of(ib);
    for (int i = 0; i < na; ++i) ga.data[i] += g.data[i];
    for (int i = 0; i < nb; ++i) gb.data[i] += g.data[na + i];
  });
}

Var slice1d(Var v, int begin, int len) {
  const Array& vv = v.value();
  require(vv.rank() == 1 && begin >= 0 && len >= 0 && begin + len <= vv.shape[0],
          "slice1d: out of range");
  Array out({len});
  std::memcpy(out.data.data(), vv.data.data() + begin, sizeof(double) * len);
  int iv = v.index();
  return v.tape()->record(std::move(out), {iv}, [iv, begin, len](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& gv = t.grad_of(iv);
    for (int i = 0; i < len; ++i) gv.data[begin + i] += g.data[i];
  });
}

Var hcat(Var a, Var b) {
  check_same_tape(a, b, "hcat");
  const Array& av = a.value();
  const Array& bv = b.value();
  require(av.rank() == 2 && bv.rank() == 2 && av.rows() == bv.rows(), "hcat: row mismatch");
  int R = av.rows(), Ca = av.cols(), Cb = bv.cols();
  Array out({R, Ca + Cb});
  for (int r = 0; r < R; ++r) {
    std::memcpy(&out.data[static_cast<size_t>(r) * (Ca + Cb)],
                &av.data[static_cast<size_t>(r) * Ca], sizeof(double) * Ca);
    std::memcpy(&out.data[static_cast<size_t>(r) * (Ca + Cb) + Ca],
                &bv.data[static_cast<size_t>(r) * Cb], sizeof(double) * Cb);
  }
  int ia = a.index(), ib = b.index();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib, R, Ca, Cb](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& ga = t.grad_of(ia);
    Array& gb = t.grad_of(ib);
    for (int r = 0; r < R; ++r) {
      for (int c = 0; c < Ca; ++c)
        ga.data[static_cast<size_t>(r) * Ca + c] += g.data[static_cast<size_t>(r) * (Ca + Cb) + c];
      for (int c = 0; c < Cb; ++c)
        gb.data[static_cast<size_t>(r) * Cb + c] +=
            g.data[static_cast<size_t>(r) * (Ca + Cb) + Ca + c];
    }
  });
}

namespace {
Var take_cols(Var m, int begin, int len) {
  const Array& mv = m.value();
  int R = mv.rows(), C = mv.cols();
  require(begin >= 0 && begin + len <= C, "take_cols: out of range");
  Array out({R, len});
  for (int r = 0; r < R; ++r)
    std::memcpy(&out.data[static_cast<size_t>(r) * len],
                &mv.data[static_cast<size_t>(r) * C + begin], sizeof(double) * len);
  int im = m.index();
  return m.tape()->record(std::move(out), {im}, [im, begin, len, R, C](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& gm = t.grad_of(im);
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < len; ++c)
        gm.data[static_cast<size_t>(r) * C + begin + c] += g.data[static_cast<size_t>(r) * len + c];
  });
}
}  // namespace

std::pair<Var, Var> split_cols(Var m, int left_cols) {
  // copy the extent first: recording the first half reallocates the node
  // storage and would invalidate a reference into it
  require(m.value().rank() == 2, "split_cols: want rank-2");
  int total_cols = m.value().cols();
  require(left_cols > 0 && left_cols < total_cols, "split_cols: bad split point");
  Var left = take_cols(m, 0, left_cols);
  Var right = take_cols(m, left_cols, total_cols - left_cols);
  return {left, right};
}

Var stack_rows(const std::vector<Var>& rows) {
  require(!rows.empty(), "stack_rows: empty input");
  Tape* tape = rows[0].tape();
  int C = rows[0].value().shape[0];
  int R = static_cast<int>(rows.size());
  Array out({R, C});
  std::vector<int> parents(rows.size());
  for (int r = 0; r < R; ++r) {
    require(rows[r].tape() == tape && rows[r].value().rank() == 1 && rows[r].value().shape[0] == C,
            "stack_rows: inconsistent rows");
    std::memcpy(&out.data[static_cast<size_t>(r) * C], rows[r].value().data.data(),
                sizeof(double) * C);
    parents[r] = rows[r].index();
  }
  std::vector<int> ps = parents;
  return tape->record(std::move(out), std::move(parents), [ps, R, C](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    for (int r = 0; r < R; ++r) {
      Array& gr = t.grad_of(ps[r]);
      for (int c = 0; c < C; ++c) gr.data[c] += g.data[static_cast<size_t>(r) * C + c];
    }
  });
}

// ---------------------------------------------------------------------------
// reductions

Var sum(Var a) {
  double acc = 0.0;
  for (double x : a.value().data) acc += x;
  int ia = a.index();
  return a.tape()->record(Array::scalar(acc), {ia}, [ia](Tape& t, int self) {
    double g = t.grad_of(self).data[0];
    Array& ga = t.grad_of(ia);
    for (double& x : ga.data) x += g;
  });
}

Var mean_all(Var a) {
  int64_t n = a.value().numel();
  require(n > 0, "mean_all: empty");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var mean_rows(Var m) {
  const Array& mv = m.value();
  require(mv.rank() == 2 && mv.rows() > 0, "mean_rows: want non-empty [R,C]");
  int R = mv.rows(), C = mv.cols();
  Array out({C});
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) out.data[c] += mv.data[static_cast<size_t>(r) * C + c];
  for (int c = 0; c < C; ++c) out.data[c] /= R;
  int im = m.index();
  return m.tape()->record(std::move(out), {im}, [im, R, C](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& gm = t.grad_of(im);
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < C; ++c) gm.data[static_cast<size_t>(r) * C + c] += g.data[c] / R;
  });
}

Var add_n(const std::vector<Var>& xs) {
  require(!xs.empty(), "add_n: empty input");
  Tape* tape = xs[0].tape();
  Array out = xs[0].value();
  std::vector<int> parents{xs[0].index()};
  for (size_t i = 1; i < xs.size(); ++i) {
    require(xs[i].tape() == tape && xs[i].value().same_shape(out), "add_n: mismatch");
    const Array& v = xs[i].value();
    for (size_t j = 0; j < out.data.size(); ++j) out.data[j] += v.data[j];
    parents.push_back(xs[i].index());
  }
  std::vector<int> ps = parents;
  return tape->record(std::move(out), std::move(parents), [ps](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    for (int p : ps) {
      Array& gp = t.grad_of(p);
      for (size_t j = 0; j < g.data.size(); ++j) gp.data[j] += g.data[j];
    }
  });
}

// ---------------------------------------------------------------------------
// elementwise nonlinearities

namespace {
template <typename F, typename DF>
Var unary_op(Var a, F f, DF df, const char* name) {
  (void)name;
  Array out = a.value();
  for (double& x : out.data) x = f(x);
  int ia = a.index();
  return a.tape()->record(std::move(out), {ia}, [ia, df](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    const Array& av = t.value_of(ia);
    Array& ga = t.grad_of(ia);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * df(av.data[i]);
  });
}
}  // namespace

Var vtanh(Var a) {
  return unary_op(
      a, [](double x) { return std::tanh(x); },
      [](double x) {
        double th = std::tanh(x);
        return 1.0 - th * th;
      },
      "tanh");
}

Var vsigmoid(Var a) {
  return unary_op(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double x) {
        double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
      },
      "sigmoid");
}

Var silu(Var a) {
  return unary_op(
      a, [](double x) { return x / (1.0 + std::exp(-x)); },
      [](double x) {
        double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 + x * (1.0 - s));
      },
      "silu");
}

Var vsqrt(Var a) {
  return unary_op(
      a, [](double x) { return std::sqrt(x); },
      [](double x) { return 0.5 / std::sqrt(x); }, "sqrt");
}

Var vcosh(Var a) { return unary_op(a, stable_cosh, stable_sinh, "cosh"); }

Var vsinh(Var a) { return unary_op(a, stable_sinh, stable_cosh, "sinh"); }

Var sinhc(Var a) { return unary_op(a, stable_sinhc, stable_sinhc_d, "sinhc"); }

Var tanhc(Var a) { return unary_op(a, stable_tanhc, stable_tanhc_d, "tanhc"); }

Var arcosh(Var a) {
  return unary_op(
      a, [](double x) { return std::acosh(x < 1.0 ? 1.0 : x); },
      [](double x) {
        if (x <= 1.0) return 0.0;  // clamped region
        return 1.0 / std::sqrt((x - 1.0) * (x + 1.0));
      },
      "arcosh");
}

Var relu(Var a) {
  return unary_op(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x) { return x > 0.0 ? 1.0 : 0.0; }, "relu");
}

Var clamp(Var a, double lo, double hi) {
  require(lo <= hi, "clamp: lo > hi");
  Array out = a.value();
  for (double& x : out.data) x = x < lo ? lo : (x > hi ? hi : x);
  int ia = a.index();
  return a.tape()->record(std::move(out), {ia}, [ia, lo, hi](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    const Array& av = t.value_of(ia);
    Array& ga = t.grad_of(ia);
    for (size_t i = 0; i < g.data.size(); ++i)
      if (av.data[i] >= lo && av.data[i] <= hi) ga.data[i] += g.data[i];
  });
}

Var elementwise(Var a, double (*f)(double), double (*df)(double)) {
  return unary_op(a, f, df, "elementwise");
}

// ---------------------------------------------------------------------------
// structured ops

Var rmsnorm(Var x, Var gain, double eps) {
  check_same_tape(x, gain, "rmsnorm");
  const Array& xv = x.value();
  const Array& gv = gain.value();
  require(gv.rank() == 1, "rmsnorm: gain must be rank-1");
  int C = gv.shape[0];
  int R;
  if (xv.rank() == 1) {
    require(xv.shape[0] == C, "rmsnorm: size mismatch");
    R = 1;
  } else {
    require(xv.rank() == 2 && xv.cols() == C, "rmsnorm: last axis mismatch");
    R = xv.rows();
  }
  Array out(xv.shape);
  std::vector<double> inv_rms(R);
  for (int r = 0; r < R; ++r) {
    const double* xr = &xv.data[static_cast<size_t>(r) * C];
    double m = 0.0;
    for (int c = 0; c < C; ++c) m += xr[c] * xr[c];
    m = m / C;
    double ir = 1.0 / std::sqrt(m + eps);
    inv_rms[r] = ir;
    double* orow = &out.data[static_cast<size_t>(r) * C];
    for (int c = 0; c < C; ++c) orow[c] = gv.data[c] * xr[c] * ir;
  }
  int ix = x.index(), ig = gain.index();
  return x.tape()->record(std::move(out), {ix, ig},
                          [ix, ig, R, C, inv_rms](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    const Array& xv2 = t.value_of(ix);
    const Array& gv2 = t.value_of(ig);
    Array& gx = t.grad_of(ix);
    Array& gg = t.grad_of(ig);
    for (int r = 0; r < R; ++r) {
      const double* xr = &xv2.data[static_cast<size_t>(r) * C];
      const double* gr = &g.data[static_cast<size_t>(r) * C];
      double ir = inv_rms[r];
      double dotggx = 0.0;
      for (int c = 0; c < C; ++c) dotggx += gr[c] * gv2.data[c] * xr[c];
      double* gxr = &gx.data[static_cast<size_t>(r) * C];
      for (int c = 0; c < C; ++c) {
        gxr[c] += gr[c] * gv2.data[c] * ir - xr[c] * ir * ir * ir * dotggx / C;
        gg.data[c] += gr[c] * xr[c] * ir;
      }
    }
  });
}

Var depthwise_conv(Var x, Var kernel) {
  check_same_tape(x, kernel, "depthwise_conv");
  const Array& xv = x.value();
  const Array& kv = kernel.value();
  require(xv.rank() == 2 && kv.rank() == 2 && xv.cols() == kv.cols(),
          "depthwise_conv: want x[L,C], kernel[K,C]");
  int L = xv.rows(), C = xv.cols(), K = kv.rows();
  Array out({L, C});
  // y[t,c] = sum_lag k[lag,c] * x[t-lag,c], zero-padded on the left
  for (int t = 0; t < L; ++t)
    for (int lag = 0; lag < K && lag <= t; ++lag) {
      const double* krow = &kv.data[static_cast<size_t>(lag) * C];
      const double* xrow = &xv.data[static_cast<size_t>(t - lag) * C];
      double* orow = &out.data[static_cast<size_t>(t) * C];
      for (int c = 0; c < C; ++c) orow[c] += krow[c] * xrow[c];
    }
  int ix = x.index(), ik = kernel.index();
  return x.tape()->record(std::move(out), {ix, ik}, [ix, ik, L, C, K](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    const Array& xv2 = t.value_of(ix);
    const Array& kv2 = t.value_of(ik);
    if (t.node_requires_grad(ix)) {
      Array& gx = t.grad_of(ix);
      for (int tt = 0; tt < L; ++tt)
        for (int lag = 0; lag < K && lag <= tt; ++lag) {
          const double* krow = &kv2.data[static_cast<size_t>(lag) * C];
          const double* grow = &g.data[static_cast<size_t>(tt) * C];
          double* gxrow = &gx.data[static_cast<size_t>(tt - lag) * C];
          for (int c = 0; c < C; ++c) gxrow[c] += krow[c] * grow[c];
        }
    }
    if (t.node_requires_grad(ik)) {
      Array& gk = t.grad_of(ik);
      for (int tt = 0; tt < L; ++tt)
        for (int lag = 0; lag < K && lag <= tt; ++lag) {
          const double* xrow = &xv2.data[static_cast<size_t>(tt - lag) * C];
          const double* grow = &g.data[static_cast<size_t>(tt) * C];
          double* gkrow = &gk.data[static_cast<size_t>(lag) * C];
          for (int c = 0; c < C; ++c) gkrow[c] += xrow[c] * grow[c];
        }
    }
  });
}

Var ssm_scan(Var a, Var b_seq, Var c_seq, Var u) {
  check_same_tape(a, u, "ssm_scan");
  check_same_tape(b_seq, c_seq, "ssm_scan");
  const Array& av = a.value();
  const Array& bv = b_seq.value();
  const Array& cv = c_seq.value();
  const Array& uv = u.value();
  require(av.rank() == 1 && bv.rank() == 2 && cv.rank() == 2 && uv.rank() == 2,
          "ssm_scan: rank mismatch");
  int L = av.shape[0], N = bv.cols(), C = uv.cols();
  require(bv.rows() == L && cv.rows() == L && cv.cols() == N && uv.rows() == L,
          "ssm_scan: length/state mismatch");
  // h[t][c][n] = a[t] h[t-1][c][n] + B[t][n] u[t][c];  z[t][c] = <C[t], h[t][c]>
  auto hsave = std::make_shared<std::vector<double>>(static_cast<size_t>(L) * C * N, 0.0);
  Array out({L, C});
  {
    std::vector<double> h(static_cast<size_t>(C) * N, 0.0);
    for (int t = 0; t < L; ++t) {
      double at = av.data[t];
      const double* bt = &bv.data[static_cast<size_t>(t) * N];
      const double* ct = &cv.data[static_cast<size_t>(t) * N];
      const double* ut = &uv.data[static_cast<size_t>(t) * C];
      double* orow = &out.data[static_cast<size_t>(t) * C];
      for (int c = 0; c < C; ++c) {
        double* hc = &h[static_cast<size_t>(c) * N];
        double uc = ut[c];
        double z = 0.0;
        for (int n = 0; n < N; ++n) {
          hc[n] = at * hc[n] + bt[n] * uc;
          z += ct[n] * hc[n];
        }
        orow[c] = z;
      }
      std::memcpy(&(*hsave)[static_cast<size_t>(t) * C * N], h.data(), sizeof(double) * C * N);
    }
  }
  int ia = a.index(), ib = b_seq.index(), ic = c_seq.index(), iu = u.index();
  return a.tape()->record(
      std::move(out), {ia, ib, ic, iu}, [ia, ib, ic, iu, L, N, C, hsave](Tape& t, int self) {
        const Array& g = t.grad_of(self);
        const Array& av2 = t.value_of(ia);
        const Array& bv2 = t.value_of(ib);
        const Array& cv2 = t.value_of(ic);
        const Array& uv2 = t.value_of(iu);
        Array& ga = t.grad_of(ia);
        Array& gb = t.grad_of(ib);
        Array& gc = t.grad_of(ic);
        Array& gu = t.grad_of(iu);
        const std::vector<double>& H = *hsave;
        // lambda = dL/dh_t, swept backwards
        std::vector<double> lam(static_cast<size_t>(C) * N, 0.0);
        for (int tt = L - 1; tt >= 0; --tt) {
          double at = av2.data[tt];
          const double* bt = &bv2.data[static_cast<size_t>(tt) * N];
          const double* ct = &cv2.data[static_cast<size_t>(tt) * N];
          const double* ut = &uv2.data[static_cast<size_t>(tt) * C];
          const double* gz = &g.data[static_cast<size_t>(tt) * C];
          const double* ht = &H[static_cast<size_t>(tt) * C * N];
          const double* htm1 = tt > 0 ? &H[static_cast<size_t>(tt - 1) * C * N] : nullptr;
          double da_acc = 0.0;
          for (int c = 0; c < C; ++c) {
            double* lc = &lam[static_cast<size_t>(c) * N];
            const double* htc = &ht[static_cast<size_t>(c) * N];
            double gzc = gz[c];
            double du_acc = 0.0;
            for (int n = 0; n < N; ++n) {
              lc[n] += ct[n] * gzc;
              gc.data[static_cast<size_t>(tt) * N + n] += gzc * htc[n];
              if (htm1) da_acc += lc[n] * htm1[static_cast<size_t>(c) * N + n];
              gb.data[static_cast<size_t>(tt) * N + n] += lc[n] * ut[c];
              du_acc += lc[n] * bt[n];
              lc[n] *= at;
            }
            gu.data[static_cast<size_t>(tt) * C + c] += du_acc;
          }
          ga.data[tt] += da_acc;
        }
      });
}

Var embedding_lookup(Var table, std::vector<int> ids) {
  const Array& tv = table.value();
  require(tv.rank() == 2, "embedding_lookup: table must be [V,D]");
  int V = tv.rows(), D = tv.cols();
  int n = static_cast<int>(ids.size());
  Array out({n, D});
  for (int i = 0; i < n; ++i) {
    require(ids[i] >= 0 && ids[i] < V, "embedding_lookup: id out of range");
    std::memcpy(&out.data[static_cast<size_t>(i) * D],
                &tv.data[static_cast<size_t>(ids[i]) * D], sizeof(double) * D);
  }
  int it = table.index();
  return table.tape()->record(std::move(out), {it},
                              [it, ids = std::move(ids), D](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& gt = t.grad_of(it);
    for (size_t i = 0; i < ids.size(); ++i)
      for (int d = 0; d < D; ++d)
        gt.data[static_cast<size_t>(ids[i]) * D + d] += g.data[i * D + d];
  });
}

Var dropout_with_mask(Var x, Array mask) {
  require(x.value().same_shape(mask), "dropout_with_mask: mask shape mismatch");
  Array out = x.value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask.data[i];
  int ix = x.index();
  return x.tape()->record(std::move(out), {ix}, [ix, mask = std::move(mask)](Tape& t, int self) {
    const Array& g = t.grad_of(self);
    Array& gx = t.grad_of(ix);
    for (size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i] * mask.data[i];
  });
}

Var dropout(Var x, double p, Rng& rng, bool train) {
  require(p >= 0.0 && p < 1.0, "dropout: p must be in [0,1)");
  if (!train || p == 0.0) return x;
  Array mask(x.value().shape);
  double keep_scale = 1.0 / (1.0 - p);
  for (double& m : mask.data) m = rng.uniform() < p ? 0.0 : keep_scale;
  return dropout_with_mask(x, std::move(mask));
}

Var row_softmax_ce(Var sim, std::vector<int> targets) {
  const Array& sv = sim.value();
  require(sv.rank() == 2, "row_softmax_ce: want [R,C]");
  int R = sv.rows(), C = sv.cols();
  require(static_cast<int>(targets.size()) == R, "row_softmax_ce: one target per row");
  double total = 0.0;
  for (int r = 0; r < R; ++r) {
    int tgt = targets[r];
    require(tgt >= 0 && tgt < C && tgt != r, "row_softmax_ce: bad target");
    const double* row = &sv.data[static_cast<size_t>(r) * C];
    double m = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < C; ++c)
      if (c != r && row[c] > m) m = row[c];
    double Z = 0.0;
    for (int c = 0; c < C; ++c)
      if (c != r) Z += std::exp(row[c] - m);
    total += m + std::log(Z) - row[tgt];
  }
  int is = sim.index();
  return sim.tape()->record(Array::scalar(total / R), {is},
                            [is, targets = std::move(targets), R, C](Tape& t, int self) {
    double g = t.grad_of(self).data[0] / R;
    const Array& sv2 = t.value_of(is);
    Array& gs = t.grad_of(is);
    for (int r = 0; r < R; ++r) {
      const double* row = &sv2.data[static_cast<size_t>(r) * C];
      double m = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < C; ++c)
        if (c != r && row[c] > m) m = row[c];
      double Z = 0.0;
      for (int c = 0; c < C; ++c)
        if (c != r) Z += std::exp(row[c] - m);
      for (int c = 0; c < C; ++c) {
        if (c == r) continue;
        double p = std::exp(row[c] - m) / Z;
        gs.data[static_cast<size_t>(r) * C + c] += g * (p - (c == targets[r] ? 1.0 : 0.0));
      }
    }
  });
}

// ---------------------------------------------------------------------------

double finite_difference_check(const std::function<Var(Tape&, Var)>& f,
                               const Array& x, double step, int max_coords) {
  Array analytic;
  {
    Tape tape;
    Var leaf = tape.leaf(x, true);
    Var loss = f(tape, leaf);
    require(loss.value().numel() == 1, "finite_difference_check: f must return a scalar");
    tape.backward(loss);
    analytic = leaf.grad();
  }
  auto eval = [&](const Array& p) {
    Tape tape;
    Var leaf = tape.leaf(p, false);
    return f(tape, leaf).value().data[0];
  };
  int64_t n = x.numel();
  int64_t probes = (max_coords > 0 && max_coords < n) ? max_coords : n;
  double max_err = 0.0;
  for (int64_t k = 0; k < probes; ++k) {
    int64_t i = (probes == n) ? k : (k * n) / probes;
    Array xp = x, xm = x;
    xp.data[i] += step;
    xm.data[i] -= step;
    double cd = (eval(xp) - eval(xm)) / (2.0 * step);
    double err = std::fabs(analytic.data[i] - cd) / (std::fabs(cd) + 1e-8);
    if (std::isnan(cd) || std::isnan(analytic.data[i])) return std::numeric_limits<double>::quiet_NaN();
    if (err > max_err) max_err = err;
  }
  return max_err;
}

}  // namespace him::ad
