#include "him/encoder.hpp"

#include <cmath>

namespace him {

void EncoderConfig::validate() const {
  require(vocab_size >= 2, "EncoderConfig: vocab_size must include pad/unk");
  require(inner == 2 * dim, "EncoderConfig: inner must equal 2*dim");
  require(max_len >= 1 && dim >= 1 && state >= 1 && blocks >= 1 && conv_kernel >= 1,
          "EncoderConfig: non-positive extent");
  require(dropout >= 0.0 && dropout < 1.0, "EncoderConfig: dropout in [0,1)");
}

Array& ParamStore::add(const std::string& name, Array value, bool trainable, bool weight_decay) {
  require(!has(name), "ParamStore: duplicate parameter '" + name + "'");
  index_[name] = static_cast<int>(entries_.size());
  entries_.push_back({name, std::move(value), trainable, weight_decay});
  return entries_.back().value;
}

Array& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  require(it != index_.end(), "ParamStore: unknown parameter '" + name + "'");
  return entries_[it->second].value;
}

const Array& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  require(it != index_.end(), "ParamStore: unknown parameter '" + name + "'");
  return entries_[it->second].value;
}

void ParamStore::quantize_f32() {
  for (auto& e : entries_)
    for (double& v : e.value.data) v = static_cast<double>(static_cast<float>(v));
}

ad::Var ParamVars::at(const std::string& name) const {
  auto it = vars.find(name);
  require(it != vars.end(), "ParamVars: unknown parameter '" + name + "'");
  return it->second;
}

ParamVars make_leaves(ad::Tape& tape, const ParamStore& store, bool requires_grad) {
  ParamVars pv;
  for (const auto& e : store.entries())
    pv.vars.emplace(e.name, tape.leaf(e.value, requires_grad && e.trainable));
  return pv;
}

Array kaiming_init(Shape shape, int fan_in, Rng& rng) {
  require(fan_in > 0, "kaiming_init: fan_in must be positive");
  Array a(std::move(shape));
  double stddev = std::sqrt(2.0 / fan_in);
  for (double& v : a.data) v = rng.normal(0.0, stddev);
  return a;
}

Encoder::Encoder(EncoderConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Encoder::init_params(ParamStore& store, Rng& rng) const {
  int D = cfg_.dim, I = cfg_.inner, N = cfg_.state, C = cfg_.half_inner(), K = cfg_.conv_kernel;
  store.add("embed", kaiming_init({cfg_.vocab_size, D}, D, rng));
  for (int b = 0; b < cfg_.blocks; ++b) {
    std::string p = "blk" + std::to_string(b) + ".";
    store.add(p + "rms_gain", Array::full({D}, 1.0), true, false);
    store.add(p + "w_in", kaiming_init({D, I}, D, rng));
    store.add(p + "b_in", Array::zeros({I}), true, false);
    store.add(p + "conv", kaiming_init({K, C}, K, rng));
    store.add(p + "w_a", kaiming_init({C}, C, rng));
    store.add(p + "b_a", Array::zeros({1}), true, false);
    store.add(p + "w_b", kaiming_init({C, N}, C, rng));
    store.add(p + "b_b", Array::zeros({N}), true, false);
    store.add(p + "w_c", kaiming_init({C, N}, C, rng));
    store.add(p + "b_c", Array::zeros({N}), true, false);
    store.add(p + "w_g", kaiming_init({D, I}, D, rng));
    store.add(p + "b_g", Array::zeros({I}), true, false);
    store.add(p + "w_out", kaiming_init({I, D}, I, rng));
    store.add(p + "b_out", Array::zeros({D}), true, false);
  }
}

ad::Var Encoder::block_forward(ad::Tape& tape, const ParamVars& pv, int block, ad::Var x,
                               bool train, Rng* dropout_rng) const {
  (void)tape;
  std::string p = "blk" + std::to_string(block) + ".";
  int C = cfg_.half_inner();

  ad::Var xt = ad::rmsnorm(x, pv.at(p + "rms_gain"));
  ad::Var u = ad::add_rowvec(ad::matmul(xt, pv.at(p + "w_in")), pv.at(p + "b_in"));
  auto [xp, zp] = ad::split_cols(u, C);
  xp = ad::silu(ad::depthwise_conv(xp, pv.at(p + "conv")));

  // per-step selective parameters from the conv stream
  ad::Var a = ad::vsigmoid(ad::add_scalar(ad::matvec(xp, pv.at(p + "w_a")), pv.at(p + "b_a")));
  ad::Var b_seq = ad::add_rowvec(ad::matmul(xp, pv.at(p + "w_b")), pv.at(p + "b_b"));
  ad::Var c_seq = ad::add_rowvec(ad::matmul(xp, pv.at(p + "w_c")), pv.at(p + "b_c"));
  ad::Var z = ad::ssm_scan(a, b_seq, c_seq, xp);

  ad::Var comb = ad::hcat(z, ad::silu(zp));
  ad::Var gate = ad::vsigmoid(ad::add_rowvec(ad::matmul(xt, pv.at(p + "w_g")), pv.at(p + "b_g")));
  ad::Var proj =
      ad::add_rowvec(ad::matmul(ad::mul(gate, comb), pv.at(p + "w_out")), pv.at(p + "b_out"));
  ad::Var y = ad::add(proj, x);
  if (train && cfg_.dropout > 0.0) {
    require(dropout_rng != nullptr, "block_forward: train mode needs a dropout rng");
    y = ad::dropout(y, cfg_.dropout, *dropout_rng, true);
  }
  return y;
}

ad::Var Encoder::encode(ad::Tape& tape, const ParamVars& pv, std::span<const int> ids, int n_real,
                        bool train, Rng* dropout_rng) const {
  require(n_real > 0, "encode: all-pad input");
  require(n_real <= static_cast<int>(ids.size()), "encode: n_real exceeds sequence");
  std::vector<int> trimmed(ids.begin(), ids.begin() + n_real);
  ad::Var x = ad::embedding_lookup(pv.at("embed"), std::move(trimmed));
  for (int b = 0; b < cfg_.blocks; ++b) x = block_forward(tape, pv, b, x, train, dropout_rng);
  return ad::mean_rows(x);
}

Array Encoder::encode_eval(const ParamStore& store, std::span<const int> ids, int n_real) const {
  ad::Tape tape;
  ParamVars pv = make_leaves(tape, store, false);
  return encode(tape, pv, ids, n_real, false, nullptr).value();
}

Array ssd_dense(const Array& a, const Array& b_seq, const Array& c_seq, const Array& u,
                int max_len) {
  require(a.rank() == 1 && b_seq.rank() == 2 && c_seq.rank() == 2 && u.rank() == 2,
          "ssd_dense: rank mismatch");
  int L = a.shape[0], N = b_seq.cols(), C = u.cols();
  require(b_seq.rows() == L && c_seq.rows() == L && c_seq.cols() == N && u.rows() == L,
          "ssd_dense: length/state mismatch");
  require(L <= max_len, "ssd_dense: sequence too long to materialize the L x L matrix");

  // M = 1SS(a) o (C B^T), lower triangular
  std::vector<double> M(static_cast<size_t>(L) * L, 0.0);
  for (int t = 0; t < L; ++t) {
    double p = 1.0;
    for (int s = t; s >= 0; --s) {
      if (s < t) p *= a.data[s + 1];
      double cb = 0.0;
      for (int n = 0; n < N; ++n)
        cb += c_seq.data[static_cast<size_t>(t) * N + n] * b_seq.data[static_cast<size_t>(s) * N + n];
      M[static_cast<size_t>(t) * L + s] = p * cb;
    }
  }
  Array out({L, C});
  for (int t = 0; t < L; ++t)
    for (int s = 0; s <= t; ++s) {
      double m = M[static_cast<size_t>(t) * L + s];
      for (int c = 0; c < C; ++c)
        out.data[static_cast<size_t>(t) * C + c] += m * u.data[static_cast<size_t>(s) * C + c];
    }
  return out;
}

}  // namespace him
