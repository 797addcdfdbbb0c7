#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ivd {

enum class VertexKind { Observed, Latent, Error };

struct VertexId {
  std::string name;
  VertexKind kind = VertexKind::Observed;
};

/// Directed acyclic graph over named vertices tagged observed/latent/error.
///
/// Construction validates name uniqueness, edge endpoints and acyclicity, and
/// enforces that error vertices have no parents and exactly one child. Latent
/// vertices with parents are rewritten to keep every latent's own noise
/// exogenous: an auxiliary parentless latent "<name>_src" is added with an
/// edge into the original vertex, and the rewrite is recorded in
/// normalization_notes().
class Dag {
 public:
  Dag() = default;
  Dag(std::vector<VertexId> vertices,
      const std::vector<std::pair<std::string, std::string>>& edges);

  int count() const { return static_cast<int>(vertices_.size()); }
  const VertexId& vertex(int i) const { return vertices_[i]; }
  const std::vector<VertexId>& vertices() const { return vertices_; }

  int index(std::string_view name) const;  // throws input_error when unknown
  std::optional<int> find(std::string_view name) const;

  const std::vector<int>& parents(int v) const { return parents_[v]; }
  const std::vector<int>& children(int v) const { return children_[v]; }
  bool has_edge(int parent, int child) const;
  std::vector<std::pair<int, int>> edges() const;
  int edge_count() const { return edge_count_; }

  /// Deterministic topological order (Kahn with smallest-index tie break).
  const std::vector<int>& topo_order() const { return topo_; }

  /// Mask of v and all its descendants.
  std::vector<char> descendants(int v) const;
  /// Mask of all vertices in `set` and their ancestors.
  std::vector<char> ancestral_mask(const std::vector<char>& set) const;

  std::vector<std::string> names(VertexKind kind) const;
  std::vector<std::string> all_names() const;

  /// Copy with one edge removed.
  Dag without_edge(std::string_view parent, std::string_view child) const;

  const std::vector<std::string>& normalization_notes() const { return notes_; }

  /// Resolve a list of names to indices (throws input_error on unknown names).
  std::vector<int> resolve(const std::vector<std::string>& names) const;
  std::vector<char> mask(const std::vector<int>& idx) const;
  std::vector<char> mask_of(const std::vector<std::string>& names) const;

 private:
  std::vector<VertexId> vertices_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
  std::vector<int> topo_;
  std::vector<std::string> notes_;
  int edge_count_ = 0;

  void finalize();  // topo sort + structural validation
};

/// True iff S d-separates A from B: no path between A and B is active with
/// respect to S, where a collider is active when itself or a descendant lies
/// in S and a non-collider is active when outside S.
bool d_separated(const Dag& g, const std::vector<std::string>& a,
                 const std::vector<std::string>& b,
                 const std::vector<std::string>& s);
bool d_separated_idx(const Dag& g, const std::vector<int>& a,
                     const std::vector<int>& b, const std::vector<int>& s);

/// True iff an active (w.r.t. Z) path between v and y exists that is either a
/// back-door path (no colliders, into both endpoints) or any active path
/// containing a collider. Pure directed paths from v to y never count; a
/// collider-free directed path from y to v does not count either.
bool active_noncausal_path_exists(const Dag& g, std::string_view v,
                                  std::string_view y,
                                  const std::vector<std::string>& z);

/// The conditional-instrument graphical criteria for w given Z and the edge
/// x->y: (1) Z does not d-separate w from x; (2) Z d-separates w from y once
/// x->y is removed; (3) no member of Z descends from x or y.
bool graphical_iv_criteria(const Dag& g, std::string_view w,
                           const std::vector<std::string>& z,
                           std::string_view x, std::string_view y);

/// True iff every trek from VI to VJ has its left path meeting CI or its
/// right path meeting CJ. Paths include their endpoints and source.
bool t_separated(const Dag& g, const std::vector<std::string>& vi,
                 const std::vector<std::string>& vj,
                 const std::vector<std::string>& ci,
                 const std::vector<std::string>& cj);

/// Minimum of |CA|+|CB| over t-separating pairs (CA; CB), capped at
/// min(|A|,|B|). Equals the generic rank of the covariance submatrix
/// Sigma_{A,B} over linear SEMs with this graph.
int generic_rank(const Dag& g, const std::vector<std::string>& a,
                 const std::vector<std::string>& b);

struct ChokePointDiagnosis {
  std::optional<std::string> choke_point;
  // Condition flags, each required of both members of the candidate pair:
  bool unblocked_directed_path = false;   // (i)  directed path to y avoiding {x} u Z
  bool no_backdoor_to_path = false;       // (ii) no active back-door from W into that path
  bool blocks_outcome_paths = false;      // (iii) Z0 + {x} u Z blocks all W->y directed paths
  bool blocks_treatment_paths = false;    // (iv) Z0 u Z blocks all W->x directed paths
  std::vector<std::vector<std::string>> witness_paths;

  bool all_conditions() const {
    return unblocked_directed_path && no_backdoor_to_path &&
           blocks_outcome_paths && blocks_treatment_paths;
  }
};

/// Searches for a downstream conditional choke point for the pair {wi, wj}
/// given Z and the edge x->y. The choke point is set iff some vertex outside
/// Z u {wi, wj, x} satisfies all four conditions for both pair members.
ChokePointDiagnosis choke_point_diagnosis(const Dag& g, std::string_view wi,
                                          std::string_view wj,
                                          const std::vector<std::string>& z,
                                          std::string_view x,
                                          std::string_view y);

/// Adds one error vertex "e_<name>" with an edge into every observed vertex.
/// Latent vertices are left untouched (they are exogenous by normalization).
Dag expanded_graph(const Dag& g);

/// Names of all exogenous vertices of expanded_graph(g) (error vertices and
/// parentless latents) that are d-connected to i given C. These are exactly
/// the exogenous terms carried, almost everywhere, by the residual of the
/// least-squares projection of i on C.
std::vector<std::string> lemma6_support(const Dag& g, std::string_view i,
                                        const std::vector<std::string>& c);

}  // namespace ivd
