#include "him/optimizer.hpp"

#include <cmath>

namespace him {

void quantize_f32(Array& a) {
  for (double& v : a.data) v = static_cast<double>(static_cast<float>(v));
}

double clip_gradients(GradMap& grads, double max_norm) {
  require(max_norm > 0.0, "clip_gradients: max_norm must be positive");
  double sq = 0.0;
  for (auto& [name, g] : grads)
    for (double v : g.data) sq += v * v;
  double norm = std::sqrt(sq);
  if (norm > max_norm) {
    double scale = max_norm / norm;
    for (auto& [name, g] : grads)
      for (double& v : g.data) v *= scale;
  }
  return norm;
}

double lr_at(int64_t step, double lr_target, int warmup_steps) {
  require(step >= 0, "lr_at: negative step");
  if (warmup_steps <= 0) return lr_target;
  double f = static_cast<double>(step) / warmup_steps;
  return lr_target * (f < 1.0 ? f : 1.0);
}

void AdamW::load_state(std::vector<StateEntry> entries, int64_t step) {
  state_ = std::move(entries);
  slot_.clear();
  for (int i = 0; i < static_cast<int>(state_.size()); ++i) slot_[state_[i].name] = i;
  step_ = step;
}

Array& AdamW::moment(const std::string& name, const Array& like, bool first) {
  auto it = slot_.find(name);
  if (it == slot_.end()) {
    slot_[name] = static_cast<int>(state_.size());
    state_.push_back({name, Array::zeros(like.shape), Array::zeros(like.shape)});
    it = slot_.find(name);
  }
  StateEntry& e = state_[it->second];
  require(e.m.same_shape(like), "AdamW: moment shape mismatch for " + name);
  return first ? e.m : e.v;
}

bool AdamW::step(ParamStore& params, const GradMap& grads, double lr, double weight_decay) {
  for (const auto& [name, g] : grads)
    if (!g.all_finite()) return false;  // skip the step, caller logs the incident

  ++step_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    auto git = grads.find(e.name);
    if (git == grads.end()) continue;
    const Array& g = git->second;
    require(g.same_shape(e.value), "AdamW: gradient shape mismatch for " + e.name);
    Array& m = moment(e.name, e.value, true);
    Array& v = moment(e.name, e.value, false);
    double wd = e.weight_decay ? weight_decay : 0.0;
    for (size_t i = 0; i < e.value.data.size(); ++i) {
      m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g.data[i];
      v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
      double mhat = m.data[i] / bc1;
      double vhat = v.data[i] / bc2;
      double p = e.value.data[i] * (1.0 - lr * wd);
      e.value.data[i] = p - lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    quantize_f32(e.value);
    quantize_f32(m);
    quantize_f32(v);
  }
  return true;
}

}  // namespace him
