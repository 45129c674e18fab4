#include "him/sampling.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "him/array.hpp"

namespace him {

Task task_from_string(const std::string& s) {
  if (s == "mixed") return Task::Mixed;
  if (s == "multi") return Task::Multi;
  throw Error("unknown task '" + s + "' (expected mixed|multi)");
}

std::string to_string(Task t) { return t == Task::Mixed ? "mixed" : "multi"; }

void SplitFractions::validate() const {
  require(train >= 0 && val >= 0 && test >= 0, "split fractions must be non-negative");
  require(std::abs(train + val + test - 1.0) < 1e-9, "split fractions must sum to 1");
}

namespace {

std::vector<PosPair> all_positive_pairs(const Taxonomy& tax, const Closure& cl) {
  std::vector<PosPair> pairs;
  pairs.reserve(tax.direct_edges.size() + cl.indirect.size());
  for (auto [c, p] : tax.direct_edges) pairs.push_back({c, p, 1});
  for (auto& [c, p, h] : cl.indirect) pairs.push_back({c, p, h});
  std::sort(pairs.begin(), pairs.end(), [](const PosPair& a, const PosPair& b) {
    return std::tie(a.child, a.anc) < std::tie(b.child, b.anc);
  });
  return pairs;
}

void shuffle_pairs(std::vector<PosPair>& pairs, Rng& rng) {
  for (size_t i = pairs.size(); i > 1; --i)
    std::swap(pairs[i - 1], pairs[rng.below(static_cast<int64_t>(i))]);
}

}  // namespace

Splits make_splits(const Taxonomy& tax, const Closure& cl, Task task, SplitFractions fractions,
                   uint64_t seed) {
  fractions.validate();
  Rng rng(seed);
  Splits out;
  if (task == Task::Mixed) {
    auto pairs = all_positive_pairs(tax, cl);
    shuffle_pairs(pairs, rng);
    size_t n = pairs.size();
    size_t n_train = static_cast<size_t>(fractions.train * n);
    size_t n_val = static_cast<size_t>(fractions.val * n);
    out.train.assign(pairs.begin(), pairs.begin() + n_train);
    out.val.assign(pairs.begin() + n_train, pairs.begin() + n_train + n_val);
    out.test.assign(pairs.begin() + n_train + n_val, pairs.end());
  } else {
    // Multi-hop inference: train on direct edges, predict unseen
    // transitive relations; T is split across val/test only.
    for (auto [c, p] : tax.direct_edges) out.train.push_back({c, p, 1});
    std::vector<PosPair> indirect;
    for (auto& [c, p, h] : cl.indirect) indirect.push_back({c, p, h});
    shuffle_pairs(indirect, rng);
    double denom = fractions.val + fractions.test;
    require(denom > 0, "multi task needs non-zero val+test fractions");
    size_t n_val = static_cast<size_t>(fractions.val / denom * indirect.size());
    out.val.assign(indirect.begin(), indirect.begin() + n_val);
    out.test.assign(indirect.begin() + n_val, indirect.end());
  }
  return out;
}

void save_pairs_tsv(const Taxonomy& tax, std::span<const LabeledPair> pairs,
                    const std::string& path) {
  std::ofstream os(path);
  require(os.good(), "cannot write pairs file: " + path);
  for (const auto& p : pairs)
    os << tax.ids[p.child] << '\t' << tax.ids[p.candidate] << '\t'
       << (p.positive ? "positive" : "negative") << '\t' << p.hops << '\n';
}

std::vector<LabeledPair> load_pairs_tsv(const Taxonomy& tax, const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "cannot open pairs file: " + path);
  std::vector<LabeledPair> pairs;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
      if (ch == '\t') {
        f.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur.push_back(ch);
      }
    }
    f.push_back(cur);
    require(f.size() == 4, "pairs file: expected 4 TSV fields, got: " + line);
    auto ci = tax.index_of.find(f[0]);
    auto di = tax.index_of.find(f[1]);
    require(ci != tax.index_of.end() && di != tax.index_of.end(),
            "pairs file references unknown id in: " + line);
    require(f[2] == "positive" || f[2] == "negative", "pairs file: bad label in: " + line);
    pairs.push_back({ci->second, di->second, f[2] == "positive", std::stoi(f[3])});
  }
  return pairs;
}

std::vector<int> hard_negative_candidates(const Taxonomy& tax, const Closure& cl, int anchor) {
  // ancestors of the anchor within 2 hops
  std::set<int> near_anc;
  for (int p : tax.parents[anchor]) {
    near_anc.insert(p);
    for (int gp : tax.parents[p]) near_anc.insert(gp);
  }
  // their descendants within 2 hops
  std::set<int> pool;
  for (int a : near_anc) {
    for (int c : tax.children[a]) {
      pool.insert(c);
      for (int gc : tax.children[c]) pool.insert(gc);
    }
  }
  std::vector<int> out;
  for (int v : pool) {
    if (v == anchor) continue;
    if (cl.related_either_way(anchor, v)) continue;
    out.push_back(v);
  }
  return out;  // sorted by construction (set iteration)
}

namespace {

struct AnchorTable {
  std::vector<int> anchors;                          // children with allowed ancestors
  std::vector<std::vector<PosPair>> pos_by_anchor;   // aligned with anchors
  std::unordered_map<int, int> slot;
};

AnchorTable build_anchor_table(std::span<const PosPair> allowed) {
  AnchorTable t;
  for (const auto& p : allowed) {
    auto it = t.slot.find(p.child);
    if (it == t.slot.end()) {
      t.slot[p.child] = static_cast<int>(t.anchors.size());
      t.anchors.push_back(p.child);
      t.pos_by_anchor.push_back({p});
    } else {
      t.pos_by_anchor[it->second].push_back(p);
    }
  }
  return t;
}

}  // namespace

std::vector<Triplet> sample_triplets(const Taxonomy& tax, const Closure& cl,
                                     std::span<const PosPair> allowed, int count,
                                     double hard_fraction, Rng& rng) {
  require(!allowed.empty(), "sample_triplets: no positive pairs available");
  require(hard_fraction >= 0.0 && hard_fraction <= 1.0, "sample_triplets: bad hard_fraction");
  AnchorTable table = build_anchor_table(allowed);
  int n_anchors = static_cast<int>(table.anchors.size());
  int n_nodes = tax.num_nodes();

  std::unordered_map<int, std::vector<int>> hard_cache;
  std::vector<Triplet> out;
  out.reserve(count);
  int guard = 0;
  while (static_cast<int>(out.size()) < count) {
    require(++guard < 1000 * count + 1000, "sample_triplets: cannot find valid negatives");
    int slot = static_cast<int>(rng.below(n_anchors));
    int anchor = table.anchors[slot];
    const auto& positives = table.pos_by_anchor[slot];

    // 1-hop ancestors weighted twice over multi-hop ones
    int total_w = 0;
    for (const auto& p : positives) total_w += p.hops == 1 ? 2 : 1;
    int pick = static_cast<int>(rng.below(total_w));
    int pos = positives[0].anc;
    for (const auto& p : positives) {
      pick -= p.hops == 1 ? 2 : 1;
      if (pick < 0) {
        pos = p.anc;
        break;
      }
    }

    int neg = -1;
    if (rng.uniform() < hard_fraction) {
      auto it = hard_cache.find(anchor);
      if (it == hard_cache.end())
        it = hard_cache.emplace(anchor, hard_negative_candidates(tax, cl, anchor)).first;
      if (!it->second.empty())
        neg = it->second[rng.below(static_cast<int64_t>(it->second.size()))];
    }
    if (neg == -1) {
      // uniform non-ancestor
      for (int attempt = 0; attempt < 64 && neg == -1; ++attempt) {
        int cand = static_cast<int>(rng.below(n_nodes));
        if (cand != anchor && cl.hops(anchor, cand) == 0) neg = cand;
      }
      if (neg == -1) continue;  // resample anchor
    }
    out.push_back({anchor, pos, neg});
  }
  return out;
}

std::vector<Triplet> sample_triplets(const Taxonomy& tax, const Closure& cl, int count,
                                     double hard_fraction, Rng& rng) {
  auto pairs = all_positive_pairs(tax, cl);
  return sample_triplets(tax, cl, pairs, count, hard_fraction, rng);
}

std::vector<LabeledPair> build_eval_pairs(const Taxonomy& tax, const Closure& cl,
                                          std::span<const PosPair> positives, double neg_ratio,
                                          Rng& rng, bool* ratio_lowered) {
  require(neg_ratio >= 0.0, "build_eval_pairs: bad neg_ratio");
  if (ratio_lowered) *ratio_lowered = false;
  std::vector<LabeledPair> out;
  out.reserve(positives.size() * static_cast<size_t>(neg_ratio + 1));
  std::unordered_map<int, std::vector<int>> hard_cache;
  std::unordered_map<int, std::unordered_set<int>> used_by_child;  // keeps N a set
  int n_nodes = tax.num_nodes();

  for (const auto& p : positives) {
    out.push_back({p.child, p.anc, true, p.hops});
    int want = static_cast<int>(neg_ratio);
    int want_hard = (want + 1) / 2;
    auto& used = used_by_child[p.child];
    used.insert(p.anc);
    used.insert(p.child);
    auto it = hard_cache.find(p.child);
    if (it == hard_cache.end())
      it = hard_cache.emplace(p.child, hard_negative_candidates(tax, cl, p.child)).first;
    const auto& hard = it->second;
    int emitted = 0;
    for (int h = 0; h < want_hard && !hard.empty(); ++h) {
      // draw without replacement, give up after a few collisions
      int cand = -1;
      for (int attempt = 0; attempt < 16; ++attempt) {
        int c = hard[rng.below(static_cast<int64_t>(hard.size()))];
        if (!used.count(c)) {
          cand = c;
          break;
        }
      }
      if (cand == -1) break;
      used.insert(cand);
      out.push_back({p.child, cand, false, 0});
      ++emitted;
    }
    for (; emitted < want;) {
      int cand = -1;
      for (int attempt = 0; attempt < 256; ++attempt) {
        int c = static_cast<int>(rng.below(n_nodes));
        if (!used.count(c) && !cl.related_either_way(p.child, c)) {
          cand = c;
          break;
        }
      }
      if (cand == -1) {
        if (ratio_lowered) *ratio_lowered = true;
        break;
      }
      used.insert(cand);
      out.push_back({p.child, cand, false, 0});
      ++emitted;
    }
  }
  return out;
}

}  // namespace him
