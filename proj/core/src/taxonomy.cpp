#include "him/taxonomy.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "him/array.hpp"

namespace him {

namespace {

std::vector<std::string> read_tsv_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == '\t') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

/// DFS cycle check; returns an offending back edge if any.
std::optional<std::pair<int, int>> find_cycle(const Taxonomy& tax) {
  int n = tax.num_nodes();
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::pair<int, size_t>> stack;
  for (int start = 0; start < n; ++start) {
    if (state[start] != 0) continue;
    stack.push_back({start, 0});
    state[start] = 1;
    while (!stack.empty()) {
      auto& [v, ei] = stack.back();
      if (ei < tax.parents[v].size()) {
        int w = tax.parents[v][ei++];
        if (state[w] == 1) return std::make_pair(v, w);
        if (state[w] == 0) {
          state[w] = 1;
          stack.push_back({w, 0});
        }
      } else {
        state[v] = 2;
        stack.pop_back();
      }
    }
  }
  return std::nullopt;
}

void finalize_adjacency(Taxonomy& tax) {
  std::sort(tax.direct_edges.begin(), tax.direct_edges.end());
  tax.direct_edges.erase(std::unique(tax.direct_edges.begin(), tax.direct_edges.end()),
                         tax.direct_edges.end());
  tax.parents.assign(tax.num_nodes(), {});
  tax.children.assign(tax.num_nodes(), {});
  for (auto [c, p] : tax.direct_edges) {
    tax.parents[c].push_back(p);
    tax.children[p].push_back(c);
  }
  for (auto& v : tax.parents) std::sort(v.begin(), v.end());
  for (auto& v : tax.children) std::sort(v.begin(), v.end());
  if (auto back = find_cycle(tax))
    throw Error("taxonomy has a cycle; offending back edge " + tax.ids[back->first] + " -> " +
                tax.ids[back->second]);
}

}  // namespace

std::vector<int> Taxonomy::roots() const {
  std::vector<int> r;
  for (int i = 0; i < num_nodes(); ++i)
    if (parents[i].empty()) r.push_back(i);
  return r;
}

std::vector<int> Taxonomy::depths() const {
  // longest path from any root, computed in topological order
  int n = num_nodes();
  std::vector<int> indeg(n, 0), depth(n, 0);
  for (int i = 0; i < n; ++i) indeg[i] = static_cast<int>(parents[i].size());
  std::deque<int> q;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) q.push_back(i);
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int ch : children[v]) {
      depth[ch] = std::max(depth[ch], depth[v] + 1);
      if (--indeg[ch] == 0) q.push_back(ch);
    }
  }
  return depth;
}

Taxonomy load_taxonomy(const std::string& entities_path, const std::string& edges_path) {
  std::ifstream ent(entities_path);
  require(ent.good(), "cannot open entities file: " + entities_path);
  Taxonomy tax;
  std::string line;
  while (std::getline(ent, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto f = read_tsv_fields(line);
    require(f.size() >= 2, "entities file: expected id<TAB>label, got: " + line);
    require(!tax.index_of.count(f[0]), "duplicate entity id: " + f[0]);
    tax.index_of[f[0]] = tax.num_nodes();
    tax.ids.push_back(f[0]);
    tax.labels.push_back(f[1]);
  }
  require(tax.num_nodes() > 0, "entities file is empty: " + entities_path);

  std::ifstream edg(edges_path);
  require(edg.good(), "cannot open edges file: " + edges_path);
  while (std::getline(edg, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto f = read_tsv_fields(line);
    require(f.size() >= 2, "edges file: expected child<TAB>parent, got: " + line);
    auto ci = tax.index_of.find(f[0]);
    auto pi = tax.index_of.find(f[1]);
    require(ci != tax.index_of.end(), "edge references unknown id: " + f[0]);
    require(pi != tax.index_of.end(), "edge references unknown id: " + f[1]);
    tax.direct_edges.push_back({ci->second, pi->second});
  }
  finalize_adjacency(tax);
  return tax;
}

void save_taxonomy(const Taxonomy& tax, const std::string& entities_path,
                   const std::string& edges_path) {
  std::ofstream ent(entities_path);
  require(ent.good(), "cannot write entities file: " + entities_path);
  for (int i = 0; i < tax.num_nodes(); ++i) ent << tax.ids[i] << '\t' << tax.labels[i] << '\n';
  std::ofstream edg(edges_path);
  require(edg.good(), "cannot write edges file: " + edges_path);
  for (auto [c, p] : tax.direct_edges) edg << tax.ids[c] << '\t' << tax.ids[p] << '\n';
}

Closure transitive_closure(const Taxonomy& tax) {
  Closure cl;
  int n = tax.num_nodes();
  // BFS upward from each node; shortest directed hop counts
  std::vector<int> dist(n, -1);
  std::vector<int> touched;
  for (int s = 0; s < n; ++s) {
    std::deque<int> q{s};
    dist[s] = 0;
    touched.assign(1, s);
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      for (int p : tax.parents[v]) {
        if (dist[p] != -1) continue;
        dist[p] = dist[v] + 1;
        touched.push_back(p);
        q.push_back(p);
      }
    }
    for (int v : touched) {
      if (v == s) continue;
      cl.hops_of[Closure::key(s, v)] = dist[v];
      if (dist[v] >= 2) cl.indirect.push_back({s, v, dist[v]});
    }
    for (int v : touched) dist[v] = -1;
  }
  std::sort(cl.indirect.begin(), cl.indirect.end());
  return cl;
}

std::optional<int> hop_distance(const Taxonomy& tax, int u, int v) {
  require(u >= 0 && u < tax.num_nodes() && v >= 0 && v < tax.num_nodes(),
          "hop_distance: node out of range");
  if (u == v) return 0;
  std::vector<int> dist(tax.num_nodes(), -1);
  std::deque<int> q{u};
  dist[u] = 0;
  while (!q.empty()) {
    int w = q.front();
    q.pop_front();
    for (int p : tax.parents[w]) {
      if (dist[p] != -1) continue;
      dist[p] = dist[w] + 1;
      if (p == v) return dist[p];
      q.push_back(p);
    }
  }
  return std::nullopt;
}

namespace {

/// Undirected BFS distances from src restricted to one component.
void bfs_undirected(const Taxonomy& tax, int src, std::vector<int>& dist) {
  std::fill(dist.begin(), dist.end(), -1);
  std::deque<int> q{src};
  dist[src] = 0;
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    auto relax = [&](int w) {
      if (dist[w] == -1) {
        dist[w] = dist[v] + 1;
        q.push_back(w);
      }
    };
    for (int p : tax.parents[v]) relax(p);
    for (int c : tax.children[v]) relax(c);
  }
}

double quadruple_delta(const std::array<std::array<int, 4>, 4>& d, double* diameter) {
  double s1 = d[0][1] + d[2][3];
  double s2 = d[0][2] + d[1][3];
  double s3 = d[0][3] + d[1][2];
  double a = std::max({s1, s2, s3});
  double c = std::min({s1, s2, s3});
  double b = s1 + s2 + s3 - a - c;  // median
  int diam = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) diam = std::max(diam, d[i][j]);
  *diameter = diam;
  return (a - b) / 2.0;
}

}  // namespace

DeltaReport delta_hyperbolicity(const Taxonomy& tax, int64_t n_quadruples, Rng& rng,
                                int max_exhaustive_nodes, int node_sample_cap) {
  int n = tax.num_nodes();
  require(n >= 4, "delta_hyperbolicity: need at least 4 nodes");

  // largest connected component of the undirected view
  std::vector<int> comp(n, -1);
  int n_comp = 0;
  std::vector<int> dist(n);
  for (int i = 0; i < n; ++i) {
    if (comp[i] != -1) continue;
    bfs_undirected(tax, i, dist);
    for (int j = 0; j < n; ++j)
      if (dist[j] != -1) comp[j] = n_comp;
    ++n_comp;
  }
  std::vector<int> comp_size(n_comp, 0);
  for (int i = 0; i < n; ++i) ++comp_size[comp[i]];
  int best = static_cast<int>(std::max_element(comp_size.begin(), comp_size.end()) -
                              comp_size.begin());
  std::vector<int> nodes;
  for (int i = 0; i < n; ++i)
    if (comp[i] == best) nodes.push_back(i);
  require(static_cast<int>(nodes.size()) >= 4,
          "delta_hyperbolicity: largest component has fewer than 4 nodes");

  DeltaReport rep;
  rep.component_nodes = static_cast<int>(nodes.size());

  bool exhaustive =
      max_exhaustive_nodes > 0 && static_cast<int>(nodes.size()) <= max_exhaustive_nodes;

  // node subset whose pairwise distances we materialize
  std::vector<int> sample = nodes;
  if (!exhaustive && static_cast<int>(sample.size()) > node_sample_cap) {
    // uniform subset without replacement (partial Fisher-Yates)
    for (int i = 0; i < node_sample_cap; ++i) {
      int j = i + static_cast<int>(rng.below(static_cast<int64_t>(sample.size()) - i));
      std::swap(sample[i], sample[j]);
    }
    sample.resize(node_sample_cap);
  }
  int k = static_cast<int>(sample.size());
  std::vector<std::vector<int>> drow(k, std::vector<int>(k));
  {
    std::vector<int> full(n);
    for (int i = 0; i < k; ++i) {
      bfs_undirected(tax, sample[i], full);
      for (int j = 0; j < k; ++j) drow[i][j] = full[sample[j]];
    }
  }

  double sum_delta = 0.0, sum_norm = 0.0;
  int64_t count = 0;
  auto accumulate = [&](int a, int b, int c, int d4) {
    std::array<std::array<int, 4>, 4> dm{};
    int idx[4] = {a, b, c, d4};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) dm[i][j] = drow[idx[i]][idx[j]];
    double diam = 0.0;
    double delta = quadruple_delta(dm, &diam);
    sum_delta += delta;
    sum_norm += diam > 0 ? delta / diam : 0.0;
    ++count;
  };

  if (exhaustive) {
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b)
        for (int c = b + 1; c < k; ++c)
          for (int d4 = c + 1; d4 < k; ++d4) accumulate(a, b, c, d4);
    rep.exhaustive = true;
  } else {
    require(n_quadruples > 0, "delta_hyperbolicity: need a positive sample count");
    for (int64_t it = 0; it < n_quadruples; ++it) {
      int q[4];
      for (int i = 0; i < 4; ++i) {
        bool dup;
        do {
          q[i] = static_cast<int>(rng.below(k));
          dup = false;
          for (int j = 0; j < i; ++j) dup |= q[j] == q[i];
        } while (dup);
      }
      accumulate(q[0], q[1], q[2], q[3]);
    }
  }
  rep.quadruples = count;
  rep.mean_delta = count ? sum_delta / count : 0.0;
  rep.mean_normalized_delta = count ? sum_norm / count : 0.0;
  return rep;
}

namespace {

/// Deterministic pronounceable word for a node index, e.g. 137 -> "tiku".
std::string node_word(int index) {
  static const char* cons = "bdfgklmnprst";  // 12
  static const char* vow = "aeiou";          // 5
  std::string w;
  int x = index;
  do {
    w += cons[x % 12];
    w += vow[(x / 12) % 5];
    x /= 60;
  } while (x > 0);
  return w;
}

}  // namespace

Taxonomy generate_synthetic_tree(int branching, int depth, uint64_t seed, int min_branching) {
  require(branching >= 2, "generate_synthetic_tree: branching must be >= 2");
  require(depth >= 2, "generate_synthetic_tree: depth must be >= 2");
  require(min_branching >= 1 && min_branching <= branching,
          "generate_synthetic_tree: min_branching must be in [1, branching]");
  Rng rng(seed);
  Taxonomy tax;
  auto add_node = [&](const std::string& label) {
    int idx = tax.num_nodes();
    std::string id = "n" + std::to_string(idx);
    tax.index_of[id] = idx;
    tax.ids.push_back(id);
    tax.labels.push_back(label);
    return idx;
  };
  int root = add_node("root");
  std::vector<int> frontier{root};
  for (int level = 1; level <= depth; ++level) {
    std::vector<int> next;
    for (int parent : frontier) {
      int n_children =
          min_branching + static_cast<int>(rng.below(branching - min_branching + 1));
      for (int i = 0; i < n_children; ++i) {
        int child = add_node("");
        tax.labels[child] = tax.labels[parent] + " " + node_word(child);
        tax.direct_edges.push_back({child, parent});
        next.push_back(child);
      }
    }
    frontier = std::move(next);
  }
  finalize_adjacency(tax);
  return tax;
}

}  // namespace him
