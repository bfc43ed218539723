#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "triplerec/error.hpp"
#include "triplerec/tree.hpp"

namespace triplerec {

/// Event label t(v). kLoss only occurs in simulated true gene trees.
enum class Event : std::uint8_t { kExtant, kSpeciation, kDuplication, kLoss };

inline char event_code(Event e) {
  switch (e) {
    case Event::kSpeciation: return 'S';
    case Event::kDuplication: return 'D';
    case Event::kLoss: return 'L';
    case Event::kExtant: break;
  }
  return '.';
}

using SpeciesIndex = std::int32_t;

/// Event-labeled gene tree (T, t, σ). Species are indexed by their rank in
/// the sorted species set B = σ(L).
class GeneTree {
 public:
  GeneTree() = default;

  /// `species_of_vertex` holds σ(v) for leaves and is ignored for interior
  /// vertices.
  GeneTree(Tree tree, std::vector<Event> events, const std::vector<std::string>& species_of_vertex)
      : tree_(std::move(tree)), events_(std::move(events)) {
    if (events_.size() != tree_.size() || species_of_vertex.size() != tree_.size()) {
      throw UsageError("gene tree annotations do not match the vertex count");
    }
    for (const VertexId v : tree_.leaves()) {
      if (species_of_vertex[v].empty()) throw InputError("gene '" + tree_.label(v) + "' has no species");
      species_names_.push_back(species_of_vertex[v]);
    }
    std::sort(species_names_.begin(), species_names_.end());
    species_names_.erase(std::unique(species_names_.begin(), species_names_.end()), species_names_.end());
    species_.assign(tree_.size(), -1);
    for (VertexId v = 0; v < static_cast<VertexId>(tree_.size()); ++v) {
      if (tree_.is_leaf(v)) {
        if (events_[v] != Event::kExtant) {
          throw InputError("leaf '" + tree_.label(v) + "' must be an extant gene");
        }
        species_[v] = species_index(species_of_vertex[v]);
      } else if (events_[v] != Event::kSpeciation && events_[v] != Event::kDuplication) {
        throw InputError("interior vertex " + std::to_string(v) + " must be a speciation or duplication");
      }
    }
  }

  /// Builds from builder nodes annotated per node id.
  static GeneTree from_builder(const TreeBuilder& builder, TreeBuilder::NodeId root,
                               const std::vector<Event>& node_events,
                               const std::vector<std::string>& node_species) {
    auto built = builder.build(root);
    std::vector<Event> events(built.tree.size(), Event::kExtant);
    std::vector<std::string> species(built.tree.size());
    for (std::size_t n = 0; n < built.vertex_of.size(); ++n) {
      const VertexId v = built.vertex_of[n];
      if (v == kNoVertex) continue;
      events[v] = node_events[n];
      species[v] = node_species[n];
    }
    return GeneTree(std::move(built.tree), std::move(events), species);
  }

  const Tree& tree() const { return tree_; }
  Event event(VertexId v) const { return events_[v]; }
  bool is_speciation(VertexId v) const { return events_[v] == Event::kSpeciation; }
  bool is_duplication(VertexId v) const { return events_[v] == Event::kDuplication; }

  SpeciesIndex species(VertexId leaf) const { return species_[leaf]; }
  const std::string& species_name(VertexId leaf) const { return species_names_[species_[leaf]]; }
  std::span<const std::string> species_names() const { return species_names_; }
  std::size_t species_count() const { return species_names_.size(); }

  SpeciesIndex species_index(std::string_view name) const {
    const auto it = std::lower_bound(species_names_.begin(), species_names_.end(), name);
    if (it == species_names_.end() || *it != name) return -1;
    return static_cast<SpeciesIndex>(it - species_names_.begin());
  }

 private:
  Tree tree_;
  std::vector<Event> events_;
  std::vector<SpeciesIndex> species_;
  std::vector<std::string> species_names_;
};

/// One fixed-width bitset per vertex, stored contiguously.
class BitRows {
 public:
  BitRows(std::size_t rows, std::size_t bits) : words_((bits + 63) / 64), data_(rows * words_, 0) {}

  std::span<std::uint64_t> row(std::size_t r) { return {data_.data() + r * words_, words_}; }
  std::span<const std::uint64_t> row(std::size_t r) const { return {data_.data() + r * words_, words_}; }

  void set(std::size_t r, std::size_t bit) { data_[r * words_ + bit / 64] |= std::uint64_t{1} << (bit % 64); }
  bool test(std::size_t r, std::size_t bit) const {
    return (data_[r * words_ + bit / 64] >> (bit % 64)) & 1U;
  }
  void or_into(std::size_t dst, std::size_t src) {
    for (std::size_t w = 0; w < words_; ++w) data_[dst * words_ + w] |= data_[src * words_ + w];
  }
  std::size_t count(std::size_t r) const {
    std::size_t c = 0;
    for (const auto w : row(r)) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool intersects(std::size_t r1, std::size_t r2) const {
    for (std::size_t w = 0; w < words_; ++w) {
      if (data_[r1 * words_ + w] & data_[r2 * words_ + w]) return true;
    }
    return false;
  }
  std::vector<std::size_t> members(std::size_t r) const {
    std::vector<std::size_t> out;
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t bits = data_[r * words_ + w];
      while (bits != 0) {
        out.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
        bits &= bits - 1;
      }
    }
    return out;
  }

 private:
  std::size_t words_;
  std::vector<std::uint64_t> data_;
};

/// σ(L(v)) for every vertex, as bitsets over species indices.
inline BitRows species_sets(const GeneTree& gene) {
  const Tree& t = gene.tree();
  BitRows rows(t.size(), gene.species_count());
  for (VertexId v = static_cast<VertexId>(t.size()); v-- > 0;) {
    if (t.is_leaf(v)) rows.set(v, static_cast<std::size_t>(gene.species(v)));
    if (v != t.root()) rows.or_into(t.parent(v), v);
  }
  return rows;
}

/// Species tree on B with the synthetic root ρ_S and edge [ρ_S, lca(B)].
/// Vertex 0 is ρ_S and vertex 1 is lca(B).
class SpeciesTree {
 public:
  SpeciesTree() = default;

  /// `top` is the root of the tree on B; its length (if any) becomes the
  /// length of the synthetic edge.
  SpeciesTree(TreeBuilder builder, TreeBuilder::NodeId top) {
    const auto rho = builder.add_interior({top});
    tree_ = builder.build(rho, RootArity::kUnaryAllowed).tree;
    for (const VertexId v : tree_.leaves()) species_.push_back(tree_.label(v));
    std::sort(species_.begin(), species_.end());
  }

  /// Augments a plain tree on B.
  explicit SpeciesTree(const Tree& plain) {
    TreeBuilder builder;
    const auto top = copy_subtree(plain, plain.root(), builder);
    *this = SpeciesTree(std::move(builder), top);
  }

  const Tree& tree() const { return tree_; }
  VertexId rho() const { return 0; }
  VertexId top() const { return 1; }

  /// Sorted species labels B.
  std::span<const std::string> species() const { return species_; }
  std::size_t species_count() const { return species_.size(); }
  VertexId leaf(std::string_view name) const { return tree_.leaf(name); }
  VertexId find_leaf(std::string_view name) const { return tree_.find_leaf(name); }

  /// Interior vertices of the tree on B (ρ_S excluded).
  std::size_t interior_count() const { return tree_.size() - tree_.leaf_count() - 1; }

  /// The tree on B without ρ_S.
  Tree plain() const {
    TreeBuilder builder;
    const auto top_node = copy_subtree(tree_, top(), builder);
    return builder.build(top_node).tree;
  }

  /// Copies the subtree of `v` (labels and lengths) into `builder`.
  static TreeBuilder::NodeId copy_subtree(const Tree& t, VertexId v, TreeBuilder& builder) {
    std::vector<TreeBuilder::NodeId> node(t.size());
    for (VertexId u = t.subtree_end(v); u-- > v;) {
      if (t.is_leaf(u)) {
        node[u] = builder.add_leaf(t.label(u), t.length(u));
      } else {
        std::vector<TreeBuilder::NodeId> kids;
        for (const VertexId c : t.children(u)) kids.push_back(node[c]);
        node[u] = builder.add_interior(std::move(kids), t.length(u));
      }
    }
    return node[v];
  }

 private:
  Tree tree_;
  std::vector<std::string> species_;
};

inline bool equivalent(const SpeciesTree& a, const SpeciesTree& b) { return equivalent(a.tree(), b.tree()); }

}  // namespace triplerec
