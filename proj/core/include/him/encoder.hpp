#ifndef HIM_ENCODER_HPP
#define HIM_ENCODER_HPP

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "him/autograd.hpp"
#include "him/rng.hpp"

namespace him {

/// SentenceMamba dimensions. inner must be 2*dim (the input projection
/// widens D -> I and splits into two equal halves).
struct EncoderConfig {
  int vocab_size = 0;
  int max_len = 32;    // L
  int dim = 64;        // D
  int inner = 128;     // I
  int state = 16;      // N
  int blocks = 2;
  int conv_kernel = 4;
  double dropout = 0.2;

  static EncoderConfig desk() { return {}; }
  static EncoderConfig paper() {
    EncoderConfig c;
    c.max_len = 128;
    c.dim = 384;
    c.inner = 768;
    c.state = 96;
    c.blocks = 4;
    return c;
  }
  int half_inner() const { return inner / 2; }
  void validate() const;
};

/// Named parameter tensors in fixed insertion order (the checkpoint
/// manifest order). trainable/decay flags drive the optimizer.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Array value;
    bool trainable = true;
    bool weight_decay = true;
  };

  Array& add(const std::string& name, Array value, bool trainable = true,
             bool weight_decay = true);
  Array& at(const std::string& name);
  const Array& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Cast every value to f32 and back; keeps the live training state
  /// exactly representable in the checkpoint payload format.
  void quantize_f32();

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

/// Leaf Vars for every parameter on one tape (one step's graph).
struct ParamVars {
  std::unordered_map<std::string, ad::Var> vars;
  ad::Var at(const std::string& name) const;
};

ParamVars make_leaves(ad::Tape& tape, const ParamStore& store, bool requires_grad);

/// N(0, 2/fan_in) entries, seeded.
Array kaiming_init(Shape shape, int fan_in, Rng& rng);

/// Stack of Mamba2 blocks over an embedding table with mean pooling.
class Encoder {
 public:
  explicit Encoder(EncoderConfig cfg);

  const EncoderConfig& config() const { return cfg_; }

  /// Adds embedding + per-block parameters to the store.
  void init_params(ParamStore& store, Rng& rng) const;

  /// ids must carry n_real real tokens as a prefix (pad elsewhere); only
  /// the prefix is processed, which is exactly equivalent to masked mean
  /// pooling over the full padded sequence.
  ad::Var encode(ad::Tape& tape, const ParamVars& pv, std::span<const int> ids, int n_real,
                 bool train = false, Rng* dropout_rng = nullptr) const;

  /// One block in isolation (testing hook). x is [L, D].
  ad::Var block_forward(ad::Tape& tape, const ParamVars& pv, int block, ad::Var x,
                        bool train = false, Rng* dropout_rng = nullptr) const;

  /// Forward without gradients.
  Array encode_eval(const ParamStore& store, std::span<const int> ids, int n_real) const;

 private:
  EncoderConfig cfg_;
};

/// Dense state-space-dual form: out = M u with
/// M[t,s] = (prod_{k=s+1..t} a_k) <C_t, B_s> for s <= t. Materializes the
/// L x L matrix, so L is capped; the scan is the production path and this
/// is its independent algebraic twin.
Array ssd_dense(const Array& a, const Array& b_seq, const Array& c_seq, const Array& u,
                int max_len = 512);

}  // namespace him

#endif
