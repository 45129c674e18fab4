#ifndef HIM_SAMPLING_HPP
#define HIM_SAMPLING_HPP

#include <span>
#include <string>
#include <vector>

#include "him/rng.hpp"
#include "him/taxonomy.hpp"

namespace him {

/// Training triple: (anchor, positive ancestor, negative). The negative is
/// never an ancestor of the anchor.
struct Triplet {
  int anchor;
  int pos;
  int neg;
};

/// Evaluation pair; hops = 0 for negatives.
struct LabeledPair {
  int child;
  int candidate;
  bool positive;
  int hops;
};

/// A subsumption pair with its hop count, the unit of split assignment.
struct PosPair {
  int child;
  int anc;
  int hops;
};

enum class Task { Mixed, Multi };
Task task_from_string(const std::string& s);
std::string to_string(Task t);

struct SplitFractions {
  double train = 0.6, val = 0.2, test = 0.2;
  void validate() const;
};

/// Positive relation pairs per split. Mixed: E u T partitioned three ways.
/// Multi: all of E is train-visible; T is partitioned across val/test.
struct Splits {
  std::vector<PosPair> train, val, test;
};

Splits make_splits(const Taxonomy& tax, const Closure& cl, Task task, SplitFractions fractions,
                   uint64_t seed);

void save_pairs_tsv(const Taxonomy& tax, std::span<const LabeledPair> pairs,
                    const std::string& path);
std::vector<LabeledPair> load_pairs_tsv(const Taxonomy& tax, const std::string& path);

/// Structural neighbor candidates: shares an ancestor within 2 hops, no
/// subsumption in either direction ("siblings/cousins").
std::vector<int> hard_negative_candidates(const Taxonomy& tax, const Closure& cl, int anchor);

/// Samplers draw anchors uniformly from children appearing in `allowed`
/// (the train-visible positive pairs); the positive is one of the anchor's
/// allowed ancestors with 1-hop pairs weighted twice; with probability
/// hard_fraction the negative is a sibling/cousin, otherwise a uniform
/// non-ancestor.
std::vector<Triplet> sample_triplets(const Taxonomy& tax, const Closure& cl,
                                     std::span<const PosPair> allowed, int count,
                                     double hard_fraction, Rng& rng);

/// Unrestricted variant: positives drawn from the full E u T relation.
std::vector<Triplet> sample_triplets(const Taxonomy& tax, const Closure& cl, int count,
                                     double hard_fraction, Rng& rng);

/// Positives as given; per positive, neg_ratio negatives for the same
/// child, at least half of them hard when available. Negatives carry no
/// subsumption in either direction.
std::vector<LabeledPair> build_eval_pairs(const Taxonomy& tax, const Closure& cl,
                                          std::span<const PosPair> positives, double neg_ratio,
                                          Rng& rng, bool* ratio_lowered = nullptr);

}  // namespace him

#endif
