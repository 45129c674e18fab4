#ifndef HIM_OPTIMIZER_HPP
#define HIM_OPTIMIZER_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "him/encoder.hpp"

namespace him {

/// Gradients keyed by parameter name.
using GradMap = std::unordered_map<std::string, Array>;

/// Cast to f32 and back, keeping live state exactly representable in the
/// checkpoint payload format so resumed runs match uninterrupted ones.
void quantize_f32(Array& a);

/// Global L2 clip across all gradients; direction preserved. Returns the
/// pre-clip norm.
double clip_gradients(GradMap& grads, double max_norm);

/// lr_target * min(1, step / warmup_steps); constant after warmup.
double lr_at(int64_t step, double lr_target, int warmup_steps);

/// Adaptive moments with decoupled weight decay. Decay applies only to
/// entries flagged weight_decay in the store; moments and parameters are
/// f32-quantized after every step.
class AdamW {
 public:
  struct Config {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  AdamW() = default;
  explicit AdamW(const Config& cfg) : cfg_(cfg) {}

  /// Skips the step (returns false) when any gradient is non-finite.
  bool step(ParamStore& params, const GradMap& grads, double lr, double weight_decay);

  int64_t step_count() const { return step_; }

  // checkpoint plumbing
  struct StateEntry {
    std::string name;
    Array m, v;
  };
  const std::vector<StateEntry>& state() const { return state_; }
  void load_state(std::vector<StateEntry> entries, int64_t step);

 private:
  Config cfg_{};
  int64_t step_ = 0;
  std::vector<StateEntry> state_;
  std::unordered_map<std::string, int> slot_;
  Array& moment(const std::string& name, const Array& like, bool first);
};

}  // namespace him

#endif
