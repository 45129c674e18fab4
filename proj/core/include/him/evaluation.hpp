#ifndef HIM_EVALUATION_HPP
#define HIM_EVALUATION_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "him/model.hpp"
#include "him/sampling.hpp"

namespace him {

struct EvalReport {
  std::string task;
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t n_pos = 0;
  int64_t n_neg = 0;
  std::map<int, double> per_hop_f1;  // informational breakdown
  nlohmann::json to_json() const;
};

/// Manifold distance between the two texts' embeddings; lower scores mean
/// more likely subsumption.
double score_pair(const HimModel& model, const std::string& child_text,
                  const std::string& candidate_text);

/// Scores for taxonomy pairs with one embedding per unique entity.
std::vector<double> score_pairs(const HimModel& model, const Taxonomy& tax,
                                std::span<const LabeledPair> pairs);

struct Calibration {
  double threshold = 0.0;
  double f1 = 0.0;
};

/// Sweeps midpoints of sorted unique scores (plus predict-none /
/// predict-all sentinels) and returns the F1-maximizing threshold, ties
/// broken toward higher recall. Prediction rule: positive iff score <
/// threshold. Throws on one-class input.
Calibration calibrate_threshold(std::span<const double> scores, std::span<const uint8_t> labels);

EvalReport evaluate_pairs(std::span<const double> scores, std::span<const LabeledPair> pairs,
                          double threshold, const std::string& task_name);

/// Builds val/test pairs, calibrates the threshold on validation and
/// freezes it for the test report.
EvalReport evaluate_task(const HimModel& model, const Taxonomy& tax, const Closure& cl,
                         const Splits& splits, Task task, double neg_ratio, uint64_t pair_seed);

/// Spearman rank correlation with average ranks for ties; constant input
/// is degenerate and reports 0.
double spearman_rho(std::span<const double> a, std::span<const double> b,
                    bool* degenerate = nullptr);

struct HnormRow {
  int entity;
  double h_norm;
  int depth;
};

struct HnormReport {
  std::vector<HnormRow> rows;
  double spearman = 0.0;
  bool degenerate = false;
  double mean_h_norm = 0.0;
};

HnormReport hnorm_depth_analysis(const HimModel& model, const Taxonomy& tax, int max_entities,
                                 Rng& rng);

/// TSV: id, label, depth, h_norm, coord_0..coord_k (D+1 coords on Lorentz).
void export_embeddings(const HimModel& model, const Taxonomy& tax, const std::string& path);

}  // namespace him

#endif
