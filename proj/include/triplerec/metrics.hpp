#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "triplerec/error.hpp"
#include "triplerec/gene_tree.hpp"

namespace triplerec {

using Cluster = std::vector<std::string>;

/// Leaf sets of interior vertices strictly below the top, excluding
/// singletons and the full set. Each cluster is sorted.
inline std::set<Cluster> nontrivial_clusters(const Tree& tree, VertexId top = 0) {
  std::set<Cluster> out;
  const std::size_t all = tree.leaves_below(top).size();
  for (VertexId v = top + 1; v < tree.subtree_end(top); ++v) {
    if (tree.is_leaf(v)) continue;
    const auto below = tree.leaves_below(v);
    if (below.size() < 2 || below.size() == all) continue;
    Cluster c;
    c.reserve(below.size());
    for (const VertexId l : below) c.push_back(tree.label(l));
    std::sort(c.begin(), c.end());
    out.insert(std::move(c));
  }
  return out;
}

inline std::set<Cluster> nontrivial_clusters(const SpeciesTree& species) {
  return nontrivial_clusters(species.tree(), species.top());
}

namespace detail {

inline void require_same_leaves(const SpeciesTree& a, const SpeciesTree& b) {
  if (!std::ranges::equal(a.species(), b.species())) {
    throw InputError("species trees are on different leaf sets");
  }
}

}  // namespace detail

/// Fraction of the non-trivial clusters of `truth` that also occur in
/// `inferred`; 1 when `truth` has none.
inline double split_recovery(const SpeciesTree& truth, const SpeciesTree& inferred) {
  detail::require_same_leaves(truth, inferred);
  const auto expected = nontrivial_clusters(truth);
  if (expected.empty()) return 1.0;
  const auto found = nontrivial_clusters(inferred);
  const auto hits = std::count_if(expected.begin(), expected.end(), [&](const Cluster& c) { return found.contains(c); });
  return static_cast<double>(hits) / static_cast<double>(expected.size());
}

struct ContractionReport {
  bool is_contraction = false;
  std::size_t true_interior = 0;
  std::size_t inferred_interior = 0;
  /// Interior vertices lost by contraction; set only when is_contraction.
  std::optional<std::size_t> deficit;
  /// Clusters in exactly one of the two trees.
  std::size_t symmetric_difference = 0;
};

/// `inferred` is a contraction of `truth` iff each of its clusters is a
/// cluster of `truth`.
inline ContractionReport interior_vertex_deficit(const SpeciesTree& truth, const SpeciesTree& inferred) {
  detail::require_same_leaves(truth, inferred);
  const auto t = nontrivial_clusters(truth);
  const auto i = nontrivial_clusters(inferred);
  ContractionReport r;
  r.true_interior = truth.interior_count();
  r.inferred_interior = inferred.interior_count();
  std::size_t shared = 0;
  for (const auto& c : i) shared += t.contains(c) ? 1 : 0;
  r.symmetric_difference = (t.size() - shared) + (i.size() - shared);
  r.is_contraction = shared == i.size();
  if (r.is_contraction) r.deficit = r.true_interior - r.inferred_interior;
  return r;
}

}  // namespace triplerec
