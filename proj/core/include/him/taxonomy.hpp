#ifndef HIM_TAXONOMY_HPP
#define HIM_TAXONOMY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "him/rng.hpp"

namespace him {

/// Entity DAG with direct subsumption edges (child -> parent).
struct Taxonomy {
  std::vector<std::string> ids;     // node index -> external id
  std::vector<std::string> labels;  // node index -> label text
  std::unordered_map<std::string, int> index_of;
  std::vector<std::vector<int>> parents;   // sorted adjacency
  std::vector<std::vector<int>> children;  // sorted adjacency
  std::vector<std::pair<int, int>> direct_edges;  // (child, parent), sorted, deduped

  int num_nodes() const { return static_cast<int>(ids.size()); }
  int num_edges() const { return static_cast<int>(direct_edges.size()); }

  /// Roots: nodes without parents. Depth: longest path from any root.
  std::vector<int> roots() const;
  std::vector<int> depths() const;
};

/// Transitive ancestor relation. hops_of holds every (descendant,
/// ancestor) pair including direct edges (hops = 1); indirect holds only
/// the hops >= 2 part (the closure T, disjoint from E).
struct Closure {
  std::unordered_map<uint64_t, int> hops_of;
  std::vector<std::tuple<int, int, int>> indirect;  // (desc, anc, hops >= 2)

  static uint64_t key(int child, int anc) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(child)) << 32) |
           static_cast<uint32_t>(anc);
  }
  /// hops of the pair if ancestor, 0 otherwise.
  int hops(int child, int anc) const {
    auto it = hops_of.find(key(child, anc));
    return it == hops_of.end() ? 0 : it->second;
  }
  bool related_either_way(int a, int b) const { return hops(a, b) > 0 || hops(b, a) > 0; }
};

/// Parses the TSV pair (id<TAB>label / child<TAB>parent); '#' lines are
/// comments. Rejects cycles (reporting the offending back edge), unknown
/// ids and duplicate entity ids; duplicate edge lines are deduplicated.
Taxonomy load_taxonomy(const std::string& entities_path, const std::string& edges_path);

void save_taxonomy(const Taxonomy& tax, const std::string& entities_path,
                   const std::string& edges_path);

/// All (descendant, ancestor) pairs with shortest directed hop counts.
Closure transitive_closure(const Taxonomy& tax);

/// Shortest directed path length u -> v following child->parent edges.
std::optional<int> hop_distance(const Taxonomy& tax, int u, int v);

struct DeltaReport {
  double mean_delta = 0.0;             // mean of (max - median)/2 over quadruples
  double mean_normalized_delta = 0.0;  // per quadruple normalized by its diameter
  int64_t quadruples = 0;
  int component_nodes = 0;
  bool exhaustive = false;
};

/// Gromov four-point-condition estimate on the undirected view of the
/// largest connected component. Enumerates all quadruples when feasible
/// (<= max_exhaustive_nodes), otherwise samples n_quadruples within a
/// uniformly drawn node subset (BFS per sampled node).
DeltaReport delta_hyperbolicity(const Taxonomy& tax, int64_t n_quadruples, Rng& rng,
                                int max_exhaustive_nodes = 0, int node_sample_cap = 1024);

/// Random tree: per-node child count uniform in [min_branching, branching]
/// down to the given depth. Labels are path phrases (one synthetic word
/// per node, joined from the root) so the tokenizer sees the structure.
Taxonomy generate_synthetic_tree(int branching, int depth, uint64_t seed, int min_branching = 1);

}  // namespace him

#endif
