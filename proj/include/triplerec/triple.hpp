#pragma once

#include <compare>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "triplerec/error.hpp"
#include "triplerec/tree.hpp"

namespace triplerec {

/// Rooted triple ((a,b),c). The ingroup is stored sorted, so ((a,b),c) and
/// ((b,a),c) compare equal.
template <class Label>
class BasicTriple {
 public:
  BasicTriple(Label x, Label y, Label outgroup) : a_(std::move(x)), b_(std::move(y)), c_(std::move(outgroup)) {
    if (a_ == b_ || a_ == c_ || b_ == c_) throw InputError("triple labels must be pairwise distinct");
    if (b_ < a_) std::swap(a_, b_);
  }

  const Label& a() const { return a_; }
  const Label& b() const { return b_; }
  const Label& outgroup() const { return c_; }

  friend auto operator<=>(const BasicTriple&, const BasicTriple&) = default;
  friend bool operator==(const BasicTriple&, const BasicTriple&) = default;

 private:
  Label a_;
  Label b_;
  Label c_;
};

using Triple = BasicTriple<std::string>;
using TripleSet = std::set<Triple>;

inline bool displays(const Tree& tree, VertexId a, VertexId b, VertexId c) {
  const VertexId ab = tree.lca(a, b);
  return ab != tree.lca(ab, c);
}

/// True iff lca(a,b) ≺ lca(a,b,c) in `tree`.
inline bool displays(const Tree& tree, const Triple& t) {
  return displays(tree, tree.leaf(t.a()), tree.leaf(t.b()), tree.leaf(t.outgroup()));
}

/// Every triple displayed by `tree`, enumerated over all 3-subsets of leaves.
inline TripleSet all_triples(const Tree& tree) {
  if (tree.leaf_count() < 3) throw UsageError("all_triples needs at least three leaves");
  TripleSet out;
  const auto leaves = tree.leaves();
  const std::size_t n = leaves.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const VertexId ij = tree.lca(leaves[i], leaves[j]);
      for (std::size_t k = j + 1; k < n; ++k) {
        const VertexId ik = tree.lca(leaves[i], leaves[k]);
        const VertexId jk = tree.lca(leaves[j], leaves[k]);
        // At most one of the three pairwise lcas lies strictly below the other two.
        if (ij != ik && ik == jk) {
          out.emplace(tree.label(leaves[i]), tree.label(leaves[j]), tree.label(leaves[k]));
        } else if (ik != ij && ij == jk) {
          out.emplace(tree.label(leaves[i]), tree.label(leaves[k]), tree.label(leaves[j]));
        } else if (jk != ij && ij == ik) {
          out.emplace(tree.label(leaves[j]), tree.label(leaves[k]), tree.label(leaves[i]));
        }
      }
    }
  }
  return out;
}

/// Labels occurring in a triple set.
template <class Label>
std::set<Label> labels_of(const std::set<BasicTriple<Label>>& triples) {
  std::set<Label> out;
  for (const auto& t : triples) {
    out.insert(t.a());
    out.insert(t.b());
    out.insert(t.outgroup());
  }
  return out;
}

}  // namespace triplerec
