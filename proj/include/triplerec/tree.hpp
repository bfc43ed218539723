#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "triplerec/error.hpp"

namespace triplerec {

using VertexId = std::int32_t;
inline constexpr VertexId kNoVertex = -1;

/// Whether the root of a tree may have a single child. Only species trees
/// (which carry the synthetic vertex above lca(B)) use kUnaryAllowed.
enum class RootArity { kBranching, kUnaryAllowed };

namespace detail {

// Sparse table of argmin(depth) over preorder ranges. For u < v in preorder
// with u not an ancestor of v, lca(u, v) is the parent of the shallowest
// vertex in [u + 1, v].
class LcaIndex {
 public:
  explicit LcaIndex(const std::vector<int>& depth) : depth_(depth) {
    const std::size_t n = depth.size();
    table_.emplace_back(n);
    for (std::size_t i = 0; i < n; ++i) table_[0][i] = static_cast<VertexId>(i);
    for (std::size_t k = 1; (std::size_t{1} << k) <= n; ++k) {
      const std::size_t half = std::size_t{1} << (k - 1);
      const auto& prev = table_[k - 1];
      std::vector<VertexId> level(n - (std::size_t{1} << k) + 1);
      for (std::size_t i = 0; i < level.size(); ++i) {
        const VertexId a = prev[i];
        const VertexId b = prev[i + half];
        level[i] = depth_[b] < depth_[a] ? b : a;
      }
      table_.push_back(std::move(level));
    }
  }

  VertexId argmin(VertexId lo, VertexId hi) const {
    const auto len = static_cast<std::size_t>(hi - lo + 1);
    const std::size_t k = std::bit_width(len) - 1;
    const VertexId a = table_[k][lo];
    const VertexId b = table_[k][hi - static_cast<VertexId>(std::size_t{1} << k) + 1];
    return depth_[b] < depth_[a] ? b : a;
  }

 private:
  std::vector<int> depth_;
  std::vector<std::vector<VertexId>> table_;
};

}  // namespace detail

class TreeBuilder;

/// Immutable rooted tree. Vertex ids are dense and assigned in preorder with
/// children ordered canonically (by the smallest leaf label below them), so
/// the subtree of v occupies ids [v, subtree_end(v)) and two equivalent trees
/// have identical vertex numbering.
class Tree {
 public:
  Tree() = default;

  std::size_t size() const { return parent_.size(); }
  bool empty() const { return parent_.empty(); }
  VertexId root() const { return 0; }

  VertexId parent(VertexId v) const { return parent_[v]; }
  std::span<const VertexId> children(VertexId v) const {
    return {child_list_.data() + child_offset_[v], child_list_.data() + child_offset_[v + 1]};
  }
  std::size_t outdegree(VertexId v) const {
    return static_cast<std::size_t>(child_offset_[v + 1] - child_offset_[v]);
  }
  bool is_leaf(VertexId v) const { return outdegree(v) == 0; }

  /// Leaf label; empty for interior vertices.
  const std::string& label(VertexId v) const { return labels_[v]; }
  std::optional<double> length(VertexId v) const { return lengths_[v]; }
  bool has_lengths() const {
    return std::any_of(lengths_.begin(), lengths_.end(), [](const auto& l) { return l.has_value(); });
  }

  /// Leaves in preorder.
  std::span<const VertexId> leaves() const { return leaves_; }
  std::size_t leaf_count() const { return leaves_.size(); }

  VertexId find_leaf(std::string_view label) const {
    const auto it = leaf_index_.find(std::string(label));
    return it == leaf_index_.end() ? kNoVertex : it->second;
  }
  VertexId leaf(std::string_view label) const {
    const VertexId v = find_leaf(label);
    if (v == kNoVertex) throw InputError("unknown leaf label '" + std::string(label) + "'");
    return v;
  }

  int depth(VertexId v) const { return depth_[v]; }
  std::size_t subtree_size(VertexId v) const { return static_cast<std::size_t>(subtree_size_[v]); }
  VertexId subtree_end(VertexId v) const { return v + subtree_size_[v]; }

  /// v ⪯ a: a lies on the path from v to the root.
  bool is_below_or_equal(VertexId v, VertexId a) const { return a <= v && v < subtree_end(a); }
  /// v ≺ a.
  bool is_strictly_below(VertexId v, VertexId a) const { return a < v && v < subtree_end(a); }

  /// Pairwise lca through the lazily built range-minimum index. O(1) after
  /// the first call.
  VertexId lca(VertexId u, VertexId v) const {
    if (u == v) return u;
    if (u > v) std::swap(u, v);
    if (v < subtree_end(u)) return u;
    return parent_[index().argmin(u + 1, v)];
  }

  /// lca of a nonempty vertex set. In preorder numbering this is the lca of
  /// the smallest and the largest id.
  template <class Range>
  VertexId lca_of(const Range& vs) const {
    auto it = std::begin(vs);
    if (it == std::end(vs)) throw UsageError("lca of an empty vertex set");
    VertexId lo = *it;
    VertexId hi = *it;
    for (; it != std::end(vs); ++it) {
      lo = std::min<VertexId>(lo, *it);
      hi = std::max<VertexId>(hi, *it);
    }
    return lca(lo, hi);
  }

  /// Reference lca that walks root paths; no index involved.
  VertexId lca_by_walk(VertexId u, VertexId v) const {
    while (depth_[u] > depth_[v]) u = parent_[u];
    while (depth_[v] > depth_[u]) v = parent_[v];
    while (u != v) {
      u = parent_[u];
      v = parent_[v];
    }
    return u;
  }

  std::span<const VertexId> leaves_below(VertexId v) const {
    const auto first = std::lower_bound(leaves_.begin(), leaves_.end(), v);
    const auto last = std::lower_bound(first, leaves_.end(), subtree_end(v));
    return {first, last};
  }

  std::vector<VertexId> interior_vertices() const {
    std::vector<VertexId> out;
    for (VertexId v = 0; v < static_cast<VertexId>(size()); ++v) {
      if (!is_leaf(v)) out.push_back(v);
    }
    return out;
  }

  /// Structural identity; lengths are ignored. Because storage is canonical
  /// this decides tree equivalence.
  friend bool equivalent(const Tree& a, const Tree& b) {
    return a.parent_ == b.parent_ && a.labels_ == b.labels_;
  }

 private:
  friend class TreeBuilder;

  struct LcaCache {
    std::once_flag once;
    std::unique_ptr<const detail::LcaIndex> index;
  };

  const detail::LcaIndex& index() const {
    std::call_once(lca_cache_->once,
                   [this] { lca_cache_->index = std::make_unique<detail::LcaIndex>(depth_); });
    return *lca_cache_->index;
  }

  std::vector<VertexId> parent_;
  std::vector<VertexId> child_offset_;
  std::vector<VertexId> child_list_;
  std::vector<VertexId> subtree_size_;
  std::vector<int> depth_;
  std::vector<std::string> labels_;
  std::vector<std::optional<double>> lengths_;
  std::vector<VertexId> leaves_;
  std::unordered_map<std::string, VertexId> leaf_index_;
  std::shared_ptr<LcaCache> lca_cache_ = std::make_shared<LcaCache>();
};

/// A finished tree plus the map from builder node ids to vertex ids
/// (kNoVertex for nodes not reachable from the chosen root).
struct BuiltTree {
  Tree tree;
  std::vector<VertexId> vertex_of;
};

/// Accumulates nodes bottom-up. Children must exist before their parent, so
/// cycles cannot be expressed.
class TreeBuilder {
 public:
  using NodeId = std::size_t;

  NodeId add_leaf(std::string label, std::optional<double> length = std::nullopt) {
    nodes_.push_back({std::move(label), length, {}, false});
    return nodes_.size() - 1;
  }

  NodeId add_interior(std::vector<NodeId> children, std::optional<double> length = std::nullopt) {
    if (children.empty()) throw UsageError("interior node without children");
    for (const NodeId c : children) {
      if (c >= nodes_.size()) throw UsageError("child node does not exist");
      if (nodes_[c].has_parent) throw UsageError("node already has a parent");
      nodes_[c].has_parent = true;
    }
    nodes_.push_back({{}, length, std::move(children), false});
    return nodes_.size() - 1;
  }

  void set_length(NodeId n, std::optional<double> length) { nodes_.at(n).length = length; }
  std::optional<double> length(NodeId n) const { return nodes_.at(n).length; }
  std::size_t node_count() const { return nodes_.size(); }

  BuiltTree build(NodeId root, RootArity arity = RootArity::kBranching) const {
    if (root >= nodes_.size()) throw UsageError("root node does not exist");
    if (nodes_[root].has_parent) throw UsageError("root node has a parent");

    // Node ids are a topological order (children first), so one ascending
    // pass yields the smallest leaf label below every node.
    std::vector<const std::string*> min_label(nodes_.size(), nullptr);
    for (NodeId n = 0; n <= root; ++n) {
      const Node& node = nodes_[n];
      if (node.children.empty()) {
        min_label[n] = &node.label;
        continue;
      }
      for (const NodeId c : node.children) {
        if (min_label[n] == nullptr || *min_label[c] < *min_label[n]) min_label[n] = min_label[c];
      }
    }

    BuiltTree out;
    out.vertex_of.assign(nodes_.size(), kNoVertex);
    std::vector<NodeId> order;
    std::vector<NodeId> stack{root};
    std::vector<NodeId> sorted;
    while (!stack.empty()) {
      const NodeId n = stack.back();
      stack.pop_back();
      out.vertex_of[n] = static_cast<VertexId>(order.size());
      order.push_back(n);
      sorted = nodes_[n].children;
      std::sort(sorted.begin(), sorted.end(),
                [&](NodeId a, NodeId b) { return *min_label[a] < *min_label[b]; });
      stack.insert(stack.end(), sorted.rbegin(), sorted.rend());
    }

    Tree& t = out.tree;
    const std::size_t size = order.size();
    t.parent_.assign(size, kNoVertex);
    t.child_offset_.assign(size + 1, 0);
    t.subtree_size_.assign(size, 1);
    t.depth_.assign(size, 0);
    t.labels_.resize(size);
    t.lengths_.resize(size);
    t.child_list_.reserve(size > 0 ? size - 1 : 0);
    for (std::size_t v = 0; v < size; ++v) {
      const Node& node = nodes_[order[v]];
      t.child_offset_[v] = static_cast<VertexId>(t.child_list_.size());
      sorted = node.children;
      std::sort(sorted.begin(), sorted.end(),
                [&](NodeId a, NodeId b) { return *min_label[a] < *min_label[b]; });
      for (const NodeId c : sorted) {
        const VertexId cv = out.vertex_of[c];
        t.child_list_.push_back(cv);
        t.parent_[cv] = static_cast<VertexId>(v);
        t.depth_[cv] = t.depth_[v] + 1;
      }
      t.lengths_[v] = node.length;
      if (node.children.empty()) {
        if (node.label.empty()) throw InputError("leaf without a label");
        t.labels_[v] = node.label;
        t.leaves_.push_back(static_cast<VertexId>(v));
        if (!t.leaf_index_.emplace(node.label, static_cast<VertexId>(v)).second) {
          throw InputError("duplicate leaf label '" + node.label + "'");
        }
      } else if (node.children.size() == 1 &&
                 !(v == 0 && arity == RootArity::kUnaryAllowed)) {
        throw InputError("vertex with a single child");
      }
    }
    t.child_offset_[size] = static_cast<VertexId>(t.child_list_.size());
    for (std::size_t v = size; v-- > 1;) t.subtree_size_[t.parent_[v]] += t.subtree_size_[v];
    return out;
  }

 private:
  struct Node {
    std::string label;
    std::optional<double> length;
    std::vector<NodeId> children;
    bool has_parent;
  };
  std::vector<Node> nodes_;
};

/// T|L' together with, for every vertex of the restriction, the vertex of
/// the original tree it came from.
struct Restriction {
  Tree tree;
  std::vector<VertexId> origin;
};

/// Minimal spanning subtree on the given leaves with degree-two vertices
/// suppressed. Edge lengths of suppressed vertices are added to the
/// surviving edge below them.
template <class Labels>
Restriction restrict_to(const Tree& tree, const Labels& labels) {
  std::vector<char> keep_leaf(tree.size(), 0);
  std::size_t count = 0;
  for (const auto& label : labels) {
    const VertexId v = tree.leaf(label);
    if (!keep_leaf[v]) ++count;
    keep_leaf[v] = 1;
  }
  if (count < 2) throw UsageError("restriction needs at least two leaves");

  const std::size_t n = tree.size();
  std::vector<int> marked_children(n, 0);
  std::vector<char> has_marked(n, 0);
  for (VertexId v = static_cast<VertexId>(n); v-- > 0;) {
    if (tree.is_leaf(v)) {
      has_marked[v] = keep_leaf[v];
    } else {
      has_marked[v] = marked_children[v] > 0;
    }
    if (has_marked[v] && v != tree.root()) ++marked_children[tree.parent(v)];
  }

  TreeBuilder builder;
  std::vector<VertexId> origin_of_node;
  std::vector<TreeBuilder::NodeId> rep(n, 0);
  const bool lengths = tree.has_lengths();
  auto add_len = [](std::optional<double> a, std::optional<double> b) -> std::optional<double> {
    if (!a && !b) return std::nullopt;
    return a.value_or(0.0) + b.value_or(0.0);
  };
  VertexId top = kNoVertex;
  for (VertexId v = static_cast<VertexId>(n); v-- > 0;) {
    if (!has_marked[v]) continue;
    if (tree.is_leaf(v)) {
      rep[v] = builder.add_leaf(tree.label(v), lengths ? tree.length(v) : std::nullopt);
      origin_of_node.push_back(v);
    } else if (marked_children[v] >= 2) {
      std::vector<TreeBuilder::NodeId> kids;
      for (const VertexId c : tree.children(v)) {
        if (has_marked[c]) kids.push_back(rep[c]);
      }
      rep[v] = builder.add_interior(std::move(kids), lengths ? tree.length(v) : std::nullopt);
      origin_of_node.push_back(v);
    } else {
      for (const VertexId c : tree.children(v)) {
        if (has_marked[c]) rep[v] = rep[c];
      }
      if (lengths) builder.set_length(rep[v], add_len(builder.length(rep[v]), tree.length(v)));
      continue;
    }
    top = v;
  }
  // The spanning tree's root is lca(L'); lengths above it are not part of it.
  if (lengths) builder.set_length(rep[top], tree.length(top));
  auto built = builder.build(rep[top]);
  Restriction out;
  out.origin.assign(built.tree.size(), kNoVertex);
  for (std::size_t node = 0; node < origin_of_node.size(); ++node) {
    const VertexId nv = built.vertex_of[node];
    if (nv != kNoVertex) out.origin[nv] = origin_of_node[node];
  }
  out.tree = std::move(built.tree);
  return out;
}

}  // namespace triplerec
