#include "ivd/graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ivd/errors.hpp"

namespace ivd {

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

Dag::Dag(std::vector<VertexId> vertices,
         const std::vector<std::pair<std::string, std::string>>& edges)
    : vertices_(std::move(vertices)) {
  std::unordered_map<std::string, int> idx;
  for (int i = 0; i < count(); ++i) {
    if (!idx.emplace(vertices_[i].name, i).second)
      throw input_error("duplicate vertex name: " + vertices_[i].name);
    if (vertices_[i].name.empty()) throw input_error("empty vertex name");
  }
  parents_.assign(count(), {});
  children_.assign(count(), {});
  for (const auto& [p, c] : edges) {
    auto ip = idx.find(p), ic = idx.find(c);
    if (ip == idx.end()) throw input_error("edge endpoint not declared: " + p);
    if (ic == idx.end()) throw input_error("edge endpoint not declared: " + c);
    if (ip->second == ic->second) throw input_error("self loop at " + p);
    if (has_edge(ip->second, ic->second))
      throw input_error("duplicate edge " + p + " -> " + c);
    parents_[ic->second].push_back(ip->second);
    children_[ip->second].push_back(ic->second);
    ++edge_count_;
  }

  // Keep every latent's own noise exogenous: a latent with parents gets an
  // auxiliary parentless latent feeding it.
  const int original = count();
  for (int v = 0; v < original; ++v) {
    if (vertices_[v].kind == VertexKind::Latent && !parents_[v].empty()) {
      std::string aux = vertices_[v].name + "_src";
      while (idx.count(aux)) aux += "_";
      const int a = count();
      idx.emplace(aux, a);
      vertices_.push_back({aux, VertexKind::Latent});
      parents_.push_back({});
      children_.push_back({v});
      parents_[v].push_back(a);
      ++edge_count_;
      notes_.push_back("latent '" + vertices_[v].name +
                       "' has parents; added exogenous source '" + aux + "'");
    }
  }
  finalize();
}

void Dag::finalize() {
  for (auto& p : parents_) std::sort(p.begin(), p.end());
  for (auto& c : children_) std::sort(c.begin(), c.end());

  // Kahn with smallest-index priority for a deterministic order.
  std::vector<int> indeg(count());
  for (int v = 0; v < count(); ++v) indeg[v] = static_cast<int>(parents_[v].size());
  std::vector<int> ready;
  for (int v = 0; v < count(); ++v)
    if (indeg[v] == 0) ready.push_back(v);
  topo_.clear();
  while (!ready.empty()) {
    std::pop_heap(ready.begin(), ready.end(), std::greater<>());
    const int v = ready.back();
    ready.pop_back();
    topo_.push_back(v);
    for (int c : children_[v]) {
      if (--indeg[c] == 0) {
        ready.push_back(c);
        std::push_heap(ready.begin(), ready.end(), std::greater<>());
      }
    }
  }
  if (static_cast<int>(topo_.size()) != count()) {
    // Name a cycle for the error message: walk parents from a leftover vertex.
    std::vector<std::string> cycle;
    int v = 0;
    for (int u = 0; u < count(); ++u)
      if (indeg[u] > 0) v = u;
    std::vector<int> seen(count(), -1);
    int step = 0, at = v;
    while (seen[at] < 0) {
      seen[at] = step++;
      for (int p : parents_[at])
        if (indeg[p] > 0) {
          at = p;
          break;
        }
    }
    const int start = seen[at];
    for (int u = 0; u < count(); ++u)
      if (seen[u] >= start) cycle.push_back(vertices_[u].name);
    throw input_error("graph contains a cycle through {" + join(cycle, ", ") + "}");
  }

  for (int v = 0; v < count(); ++v) {
    if (vertices_[v].kind == VertexKind::Error) {
      if (!parents_[v].empty())
        throw input_error("error vertex " + vertices_[v].name + " has parents");
      if (children_[v].size() != 1)
        throw input_error("error vertex " + vertices_[v].name +
                          " must have exactly one child");
    }
  }
}

int Dag::index(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw input_error("unknown vertex name: " + std::string(name));
}

std::optional<int> Dag::find(std::string_view name) const {
  for (int i = 0; i < count(); ++i)
    if (vertices_[i].name == name) return i;
  return std::nullopt;
}

bool Dag::has_edge(int parent, int child) const {
  const auto& c = children_[parent];
  return std::find(c.begin(), c.end(), child) != c.end();
}

std::vector<std::pair<int, int>> Dag::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int v = 0; v < count(); ++v)
    for (int c : children_[v]) out.emplace_back(v, c);
  return out;
}

std::vector<char> Dag::descendants(int v) const {
  std::vector<char> mask(count(), 0);
  std::deque<int> q{v};
  mask[v] = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop_front();
    for (int c : children_[u])
      if (!mask[c]) {
        mask[c] = 1;
        q.push_back(c);
      }
  }
  return mask;
}

std::vector<char> Dag::ancestral_mask(const std::vector<char>& set) const {
  std::vector<char> mask(count(), 0);
  std::deque<int> q;
  for (int v = 0; v < count(); ++v)
    if (set[v]) {
      mask[v] = 1;
      q.push_back(v);
    }
  while (!q.empty()) {
    const int u = q.front();
    q.pop_front();
    for (int p : parents_[u])
      if (!mask[p]) {
        mask[p] = 1;
        q.push_back(p);
      }
  }
  return mask;
}

std::vector<std::string> Dag::names(VertexKind kind) const {
  std::vector<std::string> out;
  for (const auto& v : vertices_)
    if (v.kind == kind) out.push_back(v.name);
  return out;
}

std::vector<std::string> Dag::all_names() const {
  std::vector<std::string> out;
  out.reserve(vertices_.size());
  for (const auto& v : vertices_) out.push_back(v.name);
  return out;
}

Dag Dag::without_edge(std::string_view parent, std::string_view child) const {
  const int p = index(parent), c = index(child);
  if (!has_edge(p, c))
    throw input_error("no edge " + std::string(parent) + " -> " +
                      std::string(child) + " to remove");
  std::vector<std::pair<std::string, std::string>> es;
  for (const auto& [a, b] : edges())
    if (!(a == p && b == c))
      es.emplace_back(vertices_[a].name, vertices_[b].name);
  return Dag(vertices_, es);
}

std::vector<int> Dag::resolve(const std::vector<std::string>& names) const {
  std::vector<int> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(index(n));
  return out;
}

std::vector<char> Dag::mask(const std::vector<int>& idx) const {
  std::vector<char> m(count(), 0);
  for (int i : idx) m[i] = 1;
  return m;
}

std::vector<char> Dag::mask_of(const std::vector<std::string>& names) const {
  return mask(resolve(names));
}

// ---------------------------------------------------------------------------
// d-separation
// ---------------------------------------------------------------------------

namespace {

void check_disjoint(const std::vector<char>& a, const std::vector<char>& b,
                    const char* what) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && b[i]) throw input_error(std::string("sets must be disjoint: ") + what);
}

// Reachability over active trails. State is (vertex, arrived-from-below).
bool connected_given(const Dag& g, const std::vector<char>& a,
                     const std::vector<char>& b, const std::vector<char>& s) {
  const int n = g.count();
  const std::vector<char> anc_s = g.ancestral_mask(s);
  // visited[v] bit 0: reached moving up (from a child); bit 1: moving down.
  std::vector<unsigned char> visited(n, 0);
  std::deque<std::pair<int, int>> q;  // (vertex, dir) dir 0 = up, 1 = down
  for (int v = 0; v < n; ++v)
    if (a[v]) q.emplace_back(v, 0);
  while (!q.empty()) {
    auto [v, dir] = q.front();
    q.pop_front();
    const unsigned char bit = dir == 0 ? 1 : 2;
    if (visited[v] & bit) continue;
    visited[v] |= bit;
    if (b[v]) return true;
    if (dir == 0) {
      if (!s[v]) {
        for (int p : g.parents(v)) q.emplace_back(p, 0);
        for (int c : g.children(v)) q.emplace_back(c, 1);
      }
    } else {
      if (!s[v])
        for (int c : g.children(v)) q.emplace_back(c, 1);
      if (anc_s[v])
        for (int p : g.parents(v)) q.emplace_back(p, 0);
    }
  }
  return false;
}

}  // namespace

bool d_separated_idx(const Dag& g, const std::vector<int>& a,
                     const std::vector<int>& b, const std::vector<int>& s) {
  const auto ma = g.mask(a), mb = g.mask(b), ms = g.mask(s);
  check_disjoint(ma, mb, "A and B");
  check_disjoint(ma, ms, "A and S");
  check_disjoint(mb, ms, "B and S");
  return !connected_given(g, ma, mb, ms);
}

bool d_separated(const Dag& g, const std::vector<std::string>& a,
                 const std::vector<std::string>& b,
                 const std::vector<std::string>& s) {
  return d_separated_idx(g, g.resolve(a), g.resolve(b), g.resolve(s));
}

// ---------------------------------------------------------------------------
// Path enumeration (used by the noncausal-path predicate and the choke-point
// diagnosis; queries run on desk-scale neighborhoods)
// ---------------------------------------------------------------------------

namespace {

struct PathStep {
  int vertex;
  bool arrived_forward;  // edge into this vertex pointed at it
};

// Enumerates simple paths between a and b over the skeleton. The callback
// receives the vertex sequence and per-step arrival directions
// (steps[0].arrived_forward is meaningless); returning true stops the walk.
bool for_each_simple_path(const Dag& g, int a, int b,
                          const std::function<bool(const std::vector<PathStep>&)>& fn) {
  std::vector<char> on_path(g.count(), 0);
  std::vector<PathStep> path{{a, false}};
  on_path[a] = 1;
  std::function<bool(int)> dfs = [&](int v) -> bool {
    if (v == b) return fn(path);
    for (int c : g.children(v)) {
      if (on_path[c]) continue;
      on_path[c] = 1;
      path.push_back({c, true});
      if (dfs(c)) return true;
      path.pop_back();
      on_path[c] = 0;
    }
    for (int p : g.parents(v)) {
      if (on_path[p]) continue;
      on_path[p] = 1;
      path.push_back({p, false});
      if (dfs(p)) return true;
      path.pop_back();
      on_path[p] = 0;
    }
    return false;
  };
  return dfs(a);
}

// Activity of a path with respect to the conditioning mask. `collider_open`
// marks vertices whose descendant set meets the conditioning set.
bool path_active(const std::vector<PathStep>& path, const std::vector<char>& cond,
                 const std::vector<char>& collider_open, bool* has_collider) {
  *has_collider = false;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const bool collider = path[i].arrived_forward && !path[i + 1].arrived_forward;
    if (collider) {
      *has_collider = true;
      if (!collider_open[path[i].vertex]) return false;
    } else {
      if (cond[path[i].vertex]) return false;
    }
  }
  return true;
}

std::vector<std::string> path_names(const Dag& g, const std::vector<PathStep>& path) {
  std::vector<std::string> out;
  out.reserve(path.size());
  for (const auto& s : path) out.push_back(g.vertex(s.vertex).name);
  return out;
}

}  // namespace

bool active_noncausal_path_exists(const Dag& g, std::string_view v,
                                  std::string_view y,
                                  const std::vector<std::string>& z) {
  const int iv = g.index(v), iy = g.index(y);
  if (iv == iy) throw input_error("v and y must differ");
  const auto cond = g.mask_of(z);
  if (cond[iv] || cond[iy]) throw input_error("v and y must not be in Z");
  const auto collider_open = g.ancestral_mask(cond);
  return for_each_simple_path(g, iv, iy, [&](const std::vector<PathStep>& path) {
    bool has_collider = false;
    if (!path_active(path, cond, collider_open, &has_collider)) return false;
    if (has_collider) return true;
    const bool into_v = !path[1].arrived_forward;
    const bool into_y = path.back().arrived_forward;
    return into_v && into_y;  // back-door
  });
}

bool graphical_iv_criteria(const Dag& g, std::string_view w,
                           const std::vector<std::string>& z,
                           std::string_view x, std::string_view y) {
  const int iw = g.index(w), ix = g.index(x), iy = g.index(y);
  if (iw == ix || iw == iy || ix == iy)
    throw input_error("w, x, y must be distinct");
  if (!g.has_edge(ix, iy))
    throw input_error("graphical_iv_criteria requires the edge " +
                      std::string(x) + " -> " + std::string(y));
  const auto zi = g.resolve(z);
  const auto zm = g.mask(zi);
  if (zm[iw] || zm[ix] || zm[iy])
    throw input_error("Z must exclude w, x and y");

  // (3) no member of Z descends from x or y
  const auto dx = g.descendants(ix), dy = g.descendants(iy);
  for (int s : zi)
    if (dx[s] || dy[s]) return false;
  // (1) Z does not d-separate w from x
  if (d_separated_idx(g, {iw}, {ix}, zi)) return false;
  // (2) Z d-separates w from y with x -> y removed
  const Dag cut = g.without_edge(x, y);
  return d_separated(cut, {std::string(w)}, {std::string(y)}, z);
}

// ---------------------------------------------------------------------------
// Treks and t-separation
// ---------------------------------------------------------------------------

namespace {

// Vertices reachable from s by directed paths avoiding `avoid` entirely.
std::vector<char> reach_avoiding(const Dag& g, int s, const std::vector<char>& avoid) {
  std::vector<char> mask(g.count(), 0);
  if (avoid[s]) return mask;
  mask[s] = 1;
  std::deque<int> q{s};
  while (!q.empty()) {
    const int u = q.front();
    q.pop_front();
    for (int c : g.children(u))
      if (!mask[c] && !avoid[c]) {
        mask[c] = 1;
        q.push_back(c);
      }
  }
  return mask;
}

bool t_separated_masks(const Dag& g, const std::vector<char>& vi,
                       const std::vector<char>& vj, const std::vector<char>& ci,
                       const std::vector<char>& cj) {
  // A trek escaping (CI; CJ) exists iff some source reaches VI avoiding CI
  // and reaches VJ avoiding CJ. Any such trek can be shortened to a simple
  // one, so reachability is exact.
  for (int s = 0; s < g.count(); ++s) {
    if (ci[s] || cj[s]) continue;
    const auto left = reach_avoiding(g, s, ci);
    bool hits_i = false;
    for (int v = 0; v < g.count() && !hits_i; ++v) hits_i = left[v] && vi[v];
    if (!hits_i) continue;
    const auto right = reach_avoiding(g, s, cj);
    for (int v = 0; v < g.count(); ++v)
      if (right[v] && vj[v]) return false;
  }
  return true;
}

// Enumerates k-subsets of [0, n) in lexicographic order.
bool next_combination(std::vector<int>& c, int n) {
  const int k = static_cast<int>(c.size());
  for (int i = k - 1; i >= 0; --i) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

bool t_separated(const Dag& g, const std::vector<std::string>& vi,
                 const std::vector<std::string>& vj,
                 const std::vector<std::string>& ci,
                 const std::vector<std::string>& cj) {
  return t_separated_masks(g, g.mask_of(vi), g.mask_of(vj), g.mask_of(ci),
                           g.mask_of(cj));
}

int generic_rank(const Dag& g, const std::vector<std::string>& a,
                 const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) throw input_error("generic_rank: empty vertex set");
  const auto va = g.mask_of(a), vb = g.mask_of(b);
  const int cap = static_cast<int>(std::min(a.size(), b.size()));
  const int n = g.count();
  std::vector<char> ca(n, 0), cb(n, 0);
  for (int r = 0; r < cap; ++r) {
    for (int k = 0; k <= r; ++k) {
      std::vector<int> left(k), right(r - k);
      for (int i = 0; i < k; ++i) left[i] = i;
      for (int i = 0; i < r - k; ++i) right[i] = i;
      bool more_left = true;
      while (more_left) {
        std::fill(ca.begin(), ca.end(), 0);
        for (int i : left) ca[i] = 1;
        bool more_right = true;
        std::vector<int> r2 = right;
        while (more_right) {
          std::fill(cb.begin(), cb.end(), 0);
          for (int i : r2) cb[i] = 1;
          if (t_separated_masks(g, va, vb, ca, cb)) return r;
          more_right = !r2.empty() && next_combination(r2, n);
          if (r2.empty()) more_right = false;
        }
        more_left = !left.empty() && next_combination(left, n);
        if (left.empty()) more_left = false;
      }
    }
  }
  return cap;  // (A; {}) always t-separates
}

// ---------------------------------------------------------------------------
// Choke-point diagnosis
// ---------------------------------------------------------------------------

namespace {

// All directed simple paths from a to b, as vertex index sequences.
std::vector<std::vector<int>> directed_paths(const Dag& g, int a, int b) {
  std::vector<std::vector<int>> out;
  std::vector<int> path{a};
  std::vector<char> on_path(g.count(), 0);
  on_path[a] = 1;
  std::function<void(int)> dfs = [&](int v) {
    if (v == b) {
      out.push_back(path);
      return;
    }
    for (int c : g.children(v)) {
      if (on_path[c]) continue;
      on_path[c] = 1;
      path.push_back(c);
      dfs(c);
      path.pop_back();
      on_path[c] = 0;
    }
  };
  dfs(a);
  return out;
}

bool blocked_interior(const std::vector<int>& path, const std::vector<char>& block) {
  for (std::size_t i = 1; i + 1 < path.size(); ++i)
    if (block[path[i]]) return true;
  return false;
}

// Active back-door path between a and b given cond: collider-free, into both
// endpoints, no interior vertex conditioned.
bool active_backdoor_exists(const Dag& g, int a, int b, const std::vector<char>& cond) {
  const auto collider_open = g.ancestral_mask(cond);
  return for_each_simple_path(g, a, b, [&](const std::vector<PathStep>& path) {
    bool has_collider = false;
    if (!path_active(path, cond, collider_open, &has_collider)) return false;
    if (has_collider) return false;
    return !path[1].arrived_forward && path.back().arrived_forward;
  });
}

struct PerW {
  bool unblocked = false;
  bool clean = false;                        // some unblocked path passes (ii)
  std::vector<char> candidate;               // interior vertices of clean paths
  std::vector<int> witness;                  // first clean path
  std::vector<std::vector<int>> to_y, to_x;  // all directed paths
};

PerW analyze_w(const Dag& g, int w, int ix, int iy, const std::vector<char>& zm) {
  PerW r;
  r.candidate.assign(g.count(), 0);
  r.to_y = directed_paths(g, w, iy);
  r.to_x = directed_paths(g, w, ix);
  std::vector<char> block = zm;
  block[ix] = 1;
  for (const auto& p : r.to_y) {
    if (blocked_interior(p, block)) continue;
    r.unblocked = true;
    bool clean = true;
    for (std::size_t i = 1; i < p.size() && clean; ++i)
      clean = !active_backdoor_exists(g, w, p[i], zm);
    if (!clean) continue;
    if (!r.clean) r.witness = p;
    r.clean = true;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) r.candidate[p[i]] = 1;
  }
  return r;
}

}  // namespace

ChokePointDiagnosis choke_point_diagnosis(const Dag& g, std::string_view wi,
                                          std::string_view wj,
                                          const std::vector<std::string>& z,
                                          std::string_view x,
                                          std::string_view y) {
  const int ix = g.index(x), iy = g.index(y);
  if (!g.has_edge(ix, iy))
    throw input_error("choke_point_diagnosis requires the edge " +
                      std::string(x) + " -> " + std::string(y));
  const auto zm = g.mask_of(z);
  std::vector<int> ws{g.index(wi)};
  if (g.index(wj) != ws[0]) ws.push_back(g.index(wj));
  for (int w : ws)
    if (zm[w] || w == ix || w == iy)
      throw input_error("pair members must be distinct from Z, x, y");

  ChokePointDiagnosis diag;
  std::vector<PerW> per;
  for (int w : ws) per.push_back(analyze_w(g, w, ix, iy, zm));

  diag.unblocked_directed_path = true;
  diag.no_backdoor_to_path = true;
  for (const auto& p : per) {
    diag.unblocked_directed_path &= p.unblocked;
    diag.no_backdoor_to_path &= p.clean;
    if (!p.witness.empty()) {
      std::vector<std::string> names;
      for (int v : p.witness) names.push_back(g.vertex(v).name);
      diag.witness_paths.push_back(std::move(names));
    }
  }
  if (!diag.unblocked_directed_path || !diag.no_backdoor_to_path) return diag;

  // Candidates must lie on clean paths of every pair member and be outside
  // Z u {wi, wj, x}.
  std::vector<int> candidates;
  for (int v = 0; v < g.count(); ++v) {
    bool ok = !zm[v] && v != ix && v != iy;
    for (int w : ws) ok = ok && v != w;
    for (const auto& p : per) ok = ok && p.candidate[v];
    if (ok) candidates.push_back(v);
  }
  std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return g.vertex(a).name < g.vertex(b).name;
  });

  for (int z0 : candidates) {
    std::vector<char> block_y = zm, block_x = zm;
    block_y[ix] = 1;
    block_y[z0] = 1;
    block_x[z0] = 1;
    bool ok = true;
    for (const auto& p : per) {
      for (const auto& path : p.to_y)
        ok = ok && blocked_interior(path, block_y);
      for (const auto& path : p.to_x)
        ok = ok && blocked_interior(path, block_x);
      if (!ok) break;
    }
    if (ok) {
      diag.choke_point = g.vertex(z0).name;
      diag.blocks_outcome_paths = true;
      diag.blocks_treatment_paths = true;
      return diag;
    }
  }
  return diag;
}

// ---------------------------------------------------------------------------
// Expanded graph and residual support
// ---------------------------------------------------------------------------

Dag expanded_graph(const Dag& g) {
  std::vector<VertexId> vs = g.vertices();
  for (const auto& v : vs)
    if (v.kind == VertexKind::Error)
      throw input_error("expanded_graph: graph already has error vertices");
  std::vector<std::pair<std::string, std::string>> es;
  for (const auto& [p, c] : g.edges())
    es.emplace_back(g.vertex(p).name, g.vertex(c).name);
  for (const auto& v : g.vertices()) {
    if (v.kind != VertexKind::Observed) continue;
    std::string e = "e_" + v.name;
    if (g.find(e)) throw input_error("expanded_graph: name collision for " + e);
    vs.push_back({e, VertexKind::Error});
    es.emplace_back(e, v.name);
  }
  return Dag(vs, es);
}

std::vector<std::string> lemma6_support(const Dag& g, std::string_view i,
                                        const std::vector<std::string>& c) {
  const Dag exp = expanded_graph(g);
  const int vi = exp.index(i);
  const auto ci = exp.resolve(c);
  std::vector<std::string> out;
  for (int m = 0; m < exp.count(); ++m) {
    const auto& v = exp.vertex(m);
    const bool exogenous =
        v.kind == VertexKind::Error ||
        (v.kind == VertexKind::Latent && exp.parents(m).empty());
    if (!exogenous || m == vi) continue;
    if (!d_separated_idx(exp, {vi}, {m}, ci)) out.push_back(v.name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ivd
