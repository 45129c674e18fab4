#include "him/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

namespace him {

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per_hop = nlohmann::json::object();
  for (auto& [h, f] : per_hop_f1) per_hop[std::to_string(h)] = f;
  return {{"task", task},     {"threshold", threshold}, {"precision", precision},
          {"recall", recall}, {"f1", f1},               {"n_pos", n_pos},
          {"n_neg", n_neg},   {"per_hop", per_hop}};
}

double score_pair(const HimModel& model, const std::string& child_text,
                  const std::string& candidate_text) {
  Vec a = model.embed_text(child_text);
  Vec b = model.embed_text(candidate_text);
  return manifold_distance(a, b, model.curvature(), model.manifold.kind);
}

std::vector<double> score_pairs(const HimModel& model, const Taxonomy& tax,
                                std::span<const LabeledPair> pairs) {
  std::unordered_map<int, Vec> cache;
  auto embed = [&](int entity) -> const Vec& {
    auto it = cache.find(entity);
    if (it == cache.end()) it = cache.emplace(entity, model.embed_text(tax.labels[entity])).first;
    return it->second;
  };
  std::vector<double> scores;
  scores.reserve(pairs.size());
  double c = model.curvature();
  for (const auto& p : pairs)
    scores.push_back(manifold_distance(embed(p.child), embed(p.candidate), c, model.manifold.kind));
  return scores;
}

namespace {

struct Counts {
  int64_t tp = 0, fp = 0, fn = 0;
  double precision() const { return tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0; }
  double recall() const { return tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0; }
  double f1() const {
    double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
};

}  // namespace

Calibration calibrate_threshold(std::span<const double> scores, std::span<const uint8_t> labels) {
  require(scores.size() == labels.size() && !scores.empty(), "calibrate_threshold: size mismatch");
  int64_t total_pos = 0;
  for (uint8_t l : labels) total_pos += l ? 1 : 0;
  require(total_pos > 0 && total_pos < static_cast<int64_t>(labels.size()),
          "calibrate_threshold: need both classes present");

  std::vector<int> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] < scores[b]; });

  // candidate thresholds: below-min, midpoints between distinct scores,
  // above-max; predict positive iff score < threshold
  double best_f1 = -1.0, best_thr = 0.0;
  auto consider = [&](double thr, int64_t n_pred, int64_t tp) {
    Counts c{tp, n_pred - tp, total_pos - tp};
    double f1 = c.f1();
    if (f1 > best_f1 + 1e-15 || (std::fabs(f1 - best_f1) <= 1e-15 && thr > best_thr)) {
      best_f1 = f1;
      best_thr = thr;
    }
  };
  consider(scores[order[0]] - 1.0, 0, 0);
  int64_t tp = 0;
  for (size_t i = 0; i < order.size(); ++i) {
    tp += labels[order[i]] ? 1 : 0;
    if (i + 1 < order.size()) {
      double s = scores[order[i]], nxt = scores[order[i + 1]];
      if (nxt > s) consider((s + nxt) / 2.0, static_cast<int64_t>(i + 1), tp);
    }
  }
  consider(scores[order.back()] + 1.0, static_cast<int64_t>(order.size()), tp);
  return {best_thr, best_f1};
}

EvalReport evaluate_pairs(std::span<const double> scores, std::span<const LabeledPair> pairs,
                          double threshold, const std::string& task_name) {
  require(scores.size() == pairs.size(), "evaluate_pairs: size mismatch");
  EvalReport rep;
  rep.task = task_name;
  rep.threshold = threshold;
  Counts total;
  std::map<int, Counts> by_hop;
  int64_t fp_all = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    bool pred = scores[i] < threshold;
    if (pairs[i].positive) {
      ++rep.n_pos;
      if (pred)
        ++total.tp, ++by_hop[pairs[i].hops].tp;
      else
        ++total.fn, ++by_hop[pairs[i].hops].fn;
    } else {
      ++rep.n_neg;
      if (pred) ++total.fp, ++fp_all;
    }
  }
  rep.precision = total.precision();
  rep.recall = total.recall();
  rep.f1 = total.f1();
  for (auto& [h, c] : by_hop) {
    Counts ch{c.tp, fp_all, c.fn};  // negatives carry no hop label; FP pooled
    rep.per_hop_f1[h] = ch.f1();
  }
  return rep;
}

EvalReport evaluate_task(const HimModel& model, const Taxonomy& tax, const Closure& cl,
                         const Splits& splits, Task task, double neg_ratio, uint64_t pair_seed) {
  Rng val_rng(pair_seed);
  Rng test_rng(pair_seed + 0x517cc1b727220a95ULL);
  auto val_pairs = build_eval_pairs(tax, cl, splits.val, neg_ratio, val_rng);
  auto test_pairs = build_eval_pairs(tax, cl, splits.test, neg_ratio, test_rng);

  auto val_scores = score_pairs(model, tax, val_pairs);
  std::vector<uint8_t> val_labels(val_pairs.size());
  for (size_t i = 0; i < val_pairs.size(); ++i) val_labels[i] = val_pairs[i].positive ? 1 : 0;
  Calibration cal = calibrate_threshold(val_scores, val_labels);

  auto test_scores = score_pairs(model, tax, test_pairs);
  return evaluate_pairs(test_scores, test_pairs, cal.threshold, to_string(task));
}

double spearman_rho(std::span<const double> a, std::span<const double> b, bool* degenerate) {
  require(a.size() == b.size() && a.size() >= 2, "spearman_rho: need matched samples");
  if (degenerate) *degenerate = false;
  auto ranks = [](std::span<const double> x) {
    std::vector<int> order(x.size());
    for (size_t i = 0; i < x.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int p, int q) { return x[p] < x[q]; });
    std::vector<double> r(x.size());
    size_t i = 0;
    while (i < order.size()) {
      size_t j = i;
      while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
      double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  auto ra = ranks(a), rb = ranks(b);
  double ma = 0, mb = 0;
  for (size_t i = 0; i < ra.size(); ++i) ma += ra[i], mb += rb[i];
  ma /= ra.size();
  mb /= rb.size();
  double cov = 0, va = 0, vb = 0;
  for (size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return cov / std::sqrt(va * vb);
}

HnormReport hnorm_depth_analysis(const HimModel& model, const Taxonomy& tax, int max_entities,
                                 Rng& rng) {
  auto depths = tax.depths();
  std::vector<int> pick(tax.num_nodes());
  for (int i = 0; i < tax.num_nodes(); ++i) pick[i] = i;
  if (max_entities > 0 && max_entities < tax.num_nodes()) {
    for (int i = 0; i < max_entities; ++i) {
      int j = i + static_cast<int>(rng.below(static_cast<int64_t>(pick.size()) - i));
      std::swap(pick[i], pick[j]);
    }
    pick.resize(max_entities);
    std::sort(pick.begin(), pick.end());
  }
  HnormReport rep;
  std::vector<double> hn, dp;
  for (int e : pick) {
    Vec pt = model.embed_text(tax.labels[e]);
    double h = h_norm(pt, model.curvature(), model.manifold.kind);
    rep.rows.push_back({e, h, depths[e]});
    hn.push_back(h);
    dp.push_back(static_cast<double>(depths[e]));
    rep.mean_h_norm += h;
  }
  if (!rep.rows.empty()) rep.mean_h_norm /= static_cast<double>(rep.rows.size());
  rep.spearman = spearman_rho(hn, dp, &rep.degenerate);
  return rep;
}

void export_embeddings(const HimModel& model, const Taxonomy& tax, const std::string& path) {
  std::ofstream os(path);
  require(os.good(), "cannot write embeddings file: " + path);
  os.precision(17);
  auto depths = tax.depths();
  for (int e = 0; e < tax.num_nodes(); ++e) {
    Vec pt = model.embed_text(tax.labels[e]);
    double h = h_norm(pt, model.curvature(), model.manifold.kind);
    os << tax.ids[e] << '\t' << tax.labels[e] << '\t' << depths[e] << '\t' << h;
    for (double v : pt) os << '\t' << v;
    os << '\n';
  }
}

}  // namespace him
