#include "him/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "him/geometry_graph.hpp"

namespace him {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  require(j.is_object(), "config section '" + where + "' must be a JSON object");
  for (auto& [k, v] : j.items()) {
    (void)v;
    bool ok = false;
    for (auto a : allowed)
      if (k == a) ok = true;
    require(ok, "unknown config key '" + k + "' in " + where);
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void TrainConfig::validate() const {
  require(epochs >= 0 && batch_size >= 1, "TrainConfig: bad epochs/batch_size");
  require(lr_target >= 0.0 && warmup_steps >= 0, "TrainConfig: bad lr/warmup");
  require(clip_norm > 0.0, "TrainConfig: clip_norm must be positive");
  require(stabilize_every >= 1, "TrainConfig: stabilize_every must be >= 1");
  require(hard_fraction >= 0.0 && hard_fraction <= 1.0, "TrainConfig: bad hard_fraction");
  require(triplets_per_pair > 0.0, "TrainConfig: bad triplets_per_pair");
  require(neg_ratio >= 1.0, "TrainConfig: bad neg_ratio");
  fractions.validate();
  loss.validate();
}

json TrainConfig::to_json() const {
  return {
      {"epochs", epochs},
      {"batch_size", batch_size},
      {"lr_target", lr_target},
      {"warmup_steps", warmup_steps},
      {"weight_decay", weight_decay},
      {"clip_norm", clip_norm},
      {"stabilize_every", stabilize_every},
      {"seed", seed},
      {"split_seed", split_seed},
      {"hard_fraction", hard_fraction},
      {"triplets_per_pair", triplets_per_pair},
      {"neg_ratio", neg_ratio},
      {"vocab_max", vocab_max},
      {"task", to_string(task)},
      {"fractions", {{"train", fractions.train}, {"val", fractions.val}, {"test", fractions.test}}},
      {"manifold",
       {{"kind", to_string(manifold.kind)},
        {"c", manifold.curvature_c},
        {"learn_curvature", manifold.learn_curvature},
        {"gamma_init", manifold.gamma_init},
        {"learn_gamma", manifold.learn_gamma}}},
      {"loss",
       {{"w_ce", loss.w_ce},
        {"w_cl", loss.w_cl},
        {"alpha0", loss.alpha0},
        {"beta0", loss.beta0},
        {"temperature", loss.temperature}}},
      {"encoder",
       {{"vocab_size", encoder.vocab_size},
        {"max_len", encoder.max_len},
        {"dim", encoder.dim},
        {"inner", encoder.inner},
        {"state", encoder.state},
        {"blocks", encoder.blocks},
        {"conv_kernel", encoder.conv_kernel},
        {"dropout", encoder.dropout}}},
  };
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig cfg;
  check_keys(j, {"epochs", "batch_size", "lr_target", "warmup_steps", "weight_decay", "clip_norm",
                 "stabilize_every", "seed", "split_seed", "hard_fraction", "triplets_per_pair",
                 "neg_ratio", "vocab_max", "task", "fractions", "manifold", "loss", "encoder"},
             "train config");
  get_if(j, "epochs", cfg.epochs);
  get_if(j, "batch_size", cfg.batch_size);
  get_if(j, "lr_target", cfg.lr_target);
  get_if(j, "warmup_steps", cfg.warmup_steps);
  get_if(j, "weight_decay", cfg.weight_decay);
  get_if(j, "clip_norm", cfg.clip_norm);
  get_if(j, "stabilize_every", cfg.stabilize_every);
  get_if(j, "seed", cfg.seed);
  get_if(j, "split_seed", cfg.split_seed);
  get_if(j, "hard_fraction", cfg.hard_fraction);
  get_if(j, "triplets_per_pair", cfg.triplets_per_pair);
  get_if(j, "neg_ratio", cfg.neg_ratio);
  get_if(j, "vocab_max", cfg.vocab_max);
  if (j.contains("task")) cfg.task = task_from_string(j.at("task").get<std::string>());
  if (j.contains("fractions")) {
    const json& f = j.at("fractions");
    check_keys(f, {"train", "val", "test"}, "fractions");
    get_if(f, "train", cfg.fractions.train);
    get_if(f, "val", cfg.fractions.val);
    get_if(f, "test", cfg.fractions.test);
  }
  if (j.contains("manifold")) {
    const json& m = j.at("manifold");
    check_keys(m, {"kind", "c", "learn_curvature", "gamma_init", "learn_gamma"}, "manifold");
    if (m.contains("kind")) cfg.manifold.kind = manifold_from_string(m.at("kind"));
    get_if(m, "c", cfg.manifold.curvature_c);
    get_if(m, "learn_curvature", cfg.manifold.learn_curvature);
    get_if(m, "gamma_init", cfg.manifold.gamma_init);
    get_if(m, "learn_gamma", cfg.manifold.learn_gamma);
  }
  if (j.contains("loss")) {
    const json& l = j.at("loss");
    check_keys(l, {"w_ce", "w_cl", "alpha0", "beta0", "temperature"}, "loss");
    get_if(l, "w_ce", cfg.loss.w_ce);
    get_if(l, "w_cl", cfg.loss.w_cl);
    get_if(l, "alpha0", cfg.loss.alpha0);
    get_if(l, "beta0", cfg.loss.beta0);
    get_if(l, "temperature", cfg.loss.temperature);
  }
  if (j.contains("encoder")) {
    const json& e = j.at("encoder");
    check_keys(e, {"vocab_size", "max_len", "dim", "inner", "state", "blocks", "conv_kernel",
                   "dropout"},
               "encoder");
    get_if(e, "vocab_size", cfg.encoder.vocab_size);
    get_if(e, "max_len", cfg.encoder.max_len);
    get_if(e, "dim", cfg.encoder.dim);
    get_if(e, "inner", cfg.encoder.inner);
    get_if(e, "state", cfg.encoder.state);
    get_if(e, "blocks", cfg.encoder.blocks);
    get_if(e, "conv_kernel", cfg.encoder.conv_kernel);
    get_if(e, "dropout", cfg.encoder.dropout);
  }
  cfg.validate();
  return cfg;
}

json EpochMetrics::to_json() const {
  return {{"epoch", epoch},   {"train_loss", train_loss}, {"val_f1", val_f1},
          {"c", c},           {"gamma", gamma},           {"wallclock_s", wallclock_s}};
}

CheckpointData make_checkpoint(const HimModel& model, const AdamW* opt, const Rng* rng, int epoch,
                               const json& config) {
  CheckpointData data;
  data.config = config;
  data.vocab = model.vocab.id_to_token;
  data.rng_state = rng ? rng->save_state() : "";
  data.opt_step = opt ? opt->step_count() : 0;
  data.epoch = epoch;
  for (const auto& e : model.params.entries()) data.tensors.emplace_back(e.name, e.value);
  if (opt) {
    for (const auto& s : opt->state()) {
      data.tensors.emplace_back("opt.m." + s.name, s.m);
      data.tensors.emplace_back("opt.v." + s.name, s.v);
    }
  }
  return data;
}

HimModel model_from_checkpoint(const CheckpointData& data) {
  require(data.config.contains("encoder") && data.config.contains("manifold"),
          "checkpoint config missing encoder/manifold sections");
  TrainConfig probe;  // reuse the section parsers
  json wrapper = {{"encoder", data.config.at("encoder")}, {"manifold", data.config.at("manifold")}};
  probe = TrainConfig::from_json(wrapper);
  Vocab vocab = Vocab::from_tokens(data.vocab);
  HimModel model = build_model(probe.encoder, probe.manifold, std::move(vocab), /*seed=*/0);
  for (auto& e : model.params.entries()) {
    const Array* t = data.find(e.name);
    require(t != nullptr, "checkpoint missing tensor '" + e.name + "'");
    require(t->shape == e.value.shape, "checkpoint tensor shape mismatch for '" + e.name + "'");
    e.value = *t;
  }
  return model;
}

Trainer::Trainer(TrainConfig cfg, const Taxonomy& tax)
    : cfg_(std::move(cfg)), tax_(&tax), run_rng_(0) {
  cfg_.validate();
  closure_ = transitive_closure(tax);
  splits_ = make_splits(tax, closure_, cfg_.task, cfg_.fractions, cfg_.split_seed);
  require(!splits_.train.empty(), "training split is empty");

  Vocab vocab = Vocab::build(tax.labels, cfg_.vocab_max);
  Rng base(cfg_.seed);
  uint64_t init_seed = base.next_u64();
  uint64_t run_seed = base.next_u64();
  model_ = build_model(cfg_.encoder, cfg_.manifold, std::move(vocab), init_seed);
  run_rng_ = Rng(run_seed);
  build_state();
}

void Trainer::build_state() {
  token_cache_.clear();
  token_cache_.reserve(tax_->num_nodes());
  for (int e = 0; e < tax_->num_nodes(); ++e) {
    int n_real = 0;
    auto ids = model_.vocab.tokenize(tax_->labels[e], model_.enc_cfg.max_len, &n_real);
    require(n_real > 0, "entity '" + tax_->ids[e] + "' has an untokenizable label");
    token_cache_.emplace_back(std::move(ids), n_real);
  }
  Rng vr(cfg_.split_seed);
  val_pairs_ = build_eval_pairs(*tax_, closure_, splits_.val, cfg_.neg_ratio, vr);
  last_good_ = snapshot();
}

void Trainer::init_from_pretrained(const std::string& checkpoint_path) {
  require(epoch_ == 0 && step_ == 0, "init_from_pretrained: training already started");
  CheckpointData data = load_checkpoint(checkpoint_path);
  HimModel pre = model_from_checkpoint(data);
  // adopt the pretrained vocabulary and encoder weights; manifold scalars
  // stay at this run's fresh values
  pre.enc_cfg.dropout = cfg_.encoder.dropout;
  model_ = build_model(pre.enc_cfg, cfg_.manifold, std::move(pre.vocab), 0);
  for (auto& e : model_.params.entries()) {
    if (e.name == "gamma" || e.name == "curvature") continue;
    e.value = pre.params.at(e.name);
  }
  build_state();
}

void Trainer::resume_from(const std::string& checkpoint_path) {
  CheckpointData data = load_checkpoint(checkpoint_path);
  require(data.config.contains("train"), "not a training checkpoint (no train config)");
  TrainConfig saved = TrainConfig::from_json(data.config.at("train"));
  require(to_string(saved.manifold.kind) == to_string(cfg_.manifold.kind),
          "resume: manifold mismatch");
  restore(data, true);
}

void Trainer::restore(const CheckpointData& data, bool full_state) {
  HimModel restored = model_from_checkpoint(data);
  model_ = std::move(restored);
  build_state();
  if (full_state) {
    std::vector<AdamW::StateEntry> st;
    for (const auto& e : model_.params.entries()) {
      const Array* m = data.find("opt.m." + e.name);
      const Array* v = data.find("opt.v." + e.name);
      if (m && v) st.push_back({e.name, *m, *v});
    }
    opt_.load_state(std::move(st), data.opt_step);
    step_ = data.opt_step;
    epoch_ = data.epoch;
    if (!data.rng_state.empty()) run_rng_.restore_state(data.rng_state);
    last_good_ = snapshot();
  }
}

CheckpointData Trainer::snapshot() const {
  json config = {{"encoder", to_json_encoder()}, {"manifold", to_json_manifold()},
                 {"train", cfg_.to_json()}};
  return make_checkpoint(model_, &opt_, &run_rng_, epoch_, config);
}

void Trainer::save(const std::string& path) const { save_checkpoint(path, snapshot()); }

double Trainer::train_step(std::span<const Triplet> batch) {
  ad::Tape tape;
  ParamVars pv = make_leaves(tape, model_.params, true);
  ad::Var gamma = pv.at("gamma");
  ad::Var c = pv.at("curvature");
  Encoder enc(model_.enc_cfg);

  std::unordered_map<int, ad::Var> embedded;
  auto embed_entity = [&](int e) {
    auto it = embedded.find(e);
    if (it != embedded.end()) return it->second;
    const auto& [ids, n_real] = token_cache_[e];
    ad::Var pooled = enc.encode(tape, pv, ids, n_real, /*train=*/true, &run_rng_);
    ad::Var point = gd::embed_pooled(pooled, gamma, c, model_.manifold.kind);
    embedded.emplace(e, point);
    return point;
  };

  std::vector<TripletVars> tv;
  tv.reserve(batch.size());
  for (const auto& t : batch)
    tv.push_back({embed_entity(t.anchor), embed_entity(t.pos), embed_entity(t.neg)});
  ad::Var loss = hyperbolic_loss(tv, c, model_.manifold.kind, cfg_.loss);
  double loss_val = loss.value().data[0];

  if (!std::isfinite(loss_val)) {
    ++consecutive_nan_;
    ++skipped_;
    return loss_val;
  }
  consecutive_nan_ = 0;

  tape.backward(loss);
  GradMap grads;
  for (const auto& e : model_.params.entries()) {
    if (!e.trainable) continue;
    grads.emplace(e.name, pv.at(e.name).grad());
  }
  clip_gradients(grads, cfg_.clip_norm);
  double lr = lr_at(step_, cfg_.lr_target, cfg_.warmup_steps);
  if (!opt_.step(model_.params, grads, lr, cfg_.weight_decay)) {
    ++skipped_;  // non-finite gradient, incident counted
    return loss_val;
  }
  ++step_;

  // curvature stays strictly positive
  Array& cv = model_.params.at("curvature");
  if (cv.data[0] < kCurvatureFloor) cv.data[0] = kCurvatureFloor;
  quantize_f32(cv);
  min_c_seen_ = std::min(min_c_seen_, cv.data[0]);

  if (step_ % cfg_.stabilize_every == 0) stabilize_now();
  last_good_ = snapshot();
  return loss_val;
}

void Trainer::stabilize_now() {
  Array& cv = model_.params.at("curvature");
  if (cv.data[0] < kCurvatureFloor) cv.data[0] = kCurvatureFloor;
  quantize_f32(cv);
  require(std::isfinite(model_.gamma()), "stabilize: gamma became non-finite");

  // refresh the persisted manifold points (validation anchors)
  std::vector<int> anchors;
  for (const auto& p : val_pairs_) {
    if (std::find(anchors.begin(), anchors.end(), p.child) == anchors.end())
      anchors.push_back(p.child);
    if (anchors.size() >= 8) break;
  }
  if (anchors.empty()) anchors.push_back(0);
  anchor_cache_.clear();
  for (int e : anchors) {
    Vec pt = model_.embed_text(tax_->labels[e]);
    Vec fixed = stabilize_point(pt, model_.curvature(), model_.manifold.kind);
    require(check_on_manifold(fixed, model_.curvature(), model_.manifold.kind),
            "stabilize: anchor point failed the manifold check");
    anchor_cache_.push_back(std::move(fixed));
  }
}

double Trainer::epoch_val_f1() {
  if (val_pairs_.empty()) return 0.0;
  auto scores = score_pairs(model_, *tax_, val_pairs_);
  std::vector<uint8_t> labels(val_pairs_.size());
  bool both = false, seen_pos = false, seen_neg = false;
  for (size_t i = 0; i < val_pairs_.size(); ++i) {
    labels[i] = val_pairs_[i].positive ? 1 : 0;
    (labels[i] ? seen_pos : seen_neg) = true;
  }
  both = seen_pos && seen_neg;
  if (!both) return 0.0;
  return calibrate_threshold(scores, labels).f1;
}

TrainResult Trainer::run(const std::optional<std::string>& metrics_path,
                         const std::optional<std::string>& checkpoint_path) {
  TrainResult res;
  int n_epoch_triplets = std::max<int>(
      cfg_.batch_size,
      static_cast<int>(std::llround(cfg_.triplets_per_pair * splits_.train.size())));

  for (; epoch_ < cfg_.epochs;) {
    auto t0 = std::chrono::steady_clock::now();
    auto triplets =
        sample_triplets(*tax_, closure_, splits_.train, n_epoch_triplets, cfg_.hard_fraction,
                        run_rng_);
    double loss_sum = 0.0;
    int n_steps = 0;
    for (size_t begin = 0; begin < triplets.size(); begin += cfg_.batch_size) {
      size_t end = std::min(triplets.size(), begin + cfg_.batch_size);
      double lv = train_step(std::span<const Triplet>(triplets.data() + begin, end - begin));
      if (consecutive_nan_ >= 2) {
        if (checkpoint_path) save_checkpoint(*checkpoint_path, last_good_);
        res.diverged = true;
        res.skipped_steps = skipped_;
        return res;
      }
      if (std::isfinite(lv)) {
        loss_sum += lv;
        ++n_steps;
      }
    }
    ++epoch_;
    double f1 = epoch_val_f1();
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EpochMetrics m{epoch_, n_steps ? loss_sum / n_steps : 0.0, f1, model_.curvature(),
                   model_.gamma(), secs};
    res.metrics.push_back(m);
    if (metrics_path) {
      std::ofstream os(*metrics_path, std::ios::app);
      require(os.good(), "cannot append metrics to " + *metrics_path);
      os << m.to_json().dump() << '\n';
    }
  }
  res.skipped_steps = skipped_;
  if (checkpoint_path) save(*checkpoint_path);
  return res;
}

EvalReport Trainer::final_test_report() {
  return evaluate_task(model_, *tax_, closure_, splits_, cfg_.task, cfg_.neg_ratio,
                       cfg_.split_seed);
}

json Trainer::to_json_encoder() const {
  return {{"vocab_size", model_.enc_cfg.vocab_size}, {"max_len", model_.enc_cfg.max_len},
          {"dim", model_.enc_cfg.dim},               {"inner", model_.enc_cfg.inner},
          {"state", model_.enc_cfg.state},           {"blocks", model_.enc_cfg.blocks},
          {"conv_kernel", model_.enc_cfg.conv_kernel}, {"dropout", model_.enc_cfg.dropout}};
}

json Trainer::to_json_manifold() const {
  return {{"kind", to_string(model_.manifold.kind)},
          {"c", model_.manifold.curvature_c},
          {"learn_curvature", model_.manifold.learn_curvature},
          {"gamma_init", model_.manifold.gamma_init},
          {"learn_gamma", model_.manifold.learn_gamma}};
}

PretrainResult pretrain(HimModel& model, std::span<const std::pair<std::string, std::string>> pairs,
                        const PretrainConfig& cfg,
                        const std::optional<std::string>& checkpoint_path) {
  require(!pairs.empty(), "pretrain: empty pair corpus");
  require(cfg.batch_pairs >= 2, "pretrain: need at least 2 pairs per batch");
  AdamW opt;
  Rng rng(cfg.seed);
  Encoder enc(model.enc_cfg);

  auto tokenize = [&](const std::string& text) {
    int n_real = 0;
    auto ids = model.vocab.tokenize(text, model.enc_cfg.max_len, &n_real);
    require(n_real > 0, "pretrain: untokenizable text: '" + text + "'");
    return std::make_pair(std::move(ids), n_real);
  };

  PretrainResult res;
  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order(pairs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(static_cast<int64_t>(i))]);

    double loss_sum = 0.0;
    int n_steps = 0;
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_pairs) {
      size_t end = std::min(order.size(), begin + cfg.batch_pairs);
      if (end - begin < 2) break;  // a lone pair has no in-batch negatives
      ad::Tape tape;
      ParamVars pv = make_leaves(tape, model.params, true);
      std::vector<ad::Var> embs;
      std::vector<int> partner;
      for (size_t i = begin; i < end; ++i) {
        const auto& [ta, tb] = pairs[order[i]];
        for (const std::string* text : {&ta, &tb}) {
          auto [ids, n_real] = tokenize(*text);
          ad::Var pooled = enc.encode(tape, pv, ids, n_real, /*train=*/true, &rng);
          embs.push_back(gd::squash_normalize(pooled));
        }
        int base = static_cast<int>(embs.size()) - 2;
        partner.push_back(base + 1);
        partner.push_back(base);
      }
      ad::Var loss = batch_contrastive_loss(embs, partner, cfg.temperature);
      double lv = loss.value().data[0];
      if (!std::isfinite(lv)) continue;
      tape.backward(loss);
      GradMap grads;
      for (const auto& e : model.params.entries()) {
        if (!e.trainable) continue;
        grads.emplace(e.name, pv.at(e.name).grad());
      }
      clip_gradients(grads, cfg.clip_norm);
      if (opt.step(model.params, grads, lr_at(step, cfg.lr_target, cfg.warmup_steps),
                   cfg.weight_decay))
        ++step;
      loss_sum += lv;
      ++n_steps;
    }
    res.epoch_losses.push_back(n_steps ? loss_sum / n_steps : 0.0);
  }

  if (checkpoint_path) {
    json enc_json = {{"vocab_size", model.enc_cfg.vocab_size}, {"max_len", model.enc_cfg.max_len},
                     {"dim", model.enc_cfg.dim},               {"inner", model.enc_cfg.inner},
                     {"state", model.enc_cfg.state},           {"blocks", model.enc_cfg.blocks},
                     {"conv_kernel", model.enc_cfg.conv_kernel}, {"dropout", model.enc_cfg.dropout}};
    json man_json = {{"kind", to_string(model.manifold.kind)},
                     {"c", model.manifold.curvature_c},
                     {"learn_curvature", model.manifold.learn_curvature},
                     {"gamma_init", model.manifold.gamma_init},
                     {"learn_gamma", model.manifold.learn_gamma}};
    json config = {{"encoder", enc_json},
                   {"manifold", man_json},
                   {"pretrain",
                    {{"epochs", cfg.epochs},
                     {"batch_pairs", cfg.batch_pairs},
                     {"lr_target", cfg.lr_target},
                     {"temperature", cfg.temperature},
                     {"seed", cfg.seed}}}};
    save_checkpoint(*checkpoint_path, make_checkpoint(model, &opt, &rng, cfg.epochs, config));
  }
  return res;
}

}  // namespace him
