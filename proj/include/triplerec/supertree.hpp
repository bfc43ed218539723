#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "triplerec/error.hpp"
#include "triplerec/gene_tree.hpp"
#include "triplerec/informative.hpp"
#include "triplerec/triple.hpp"
#include "triplerec/union_find.hpp"

namespace triplerec {

/// Where BUILD got stuck: a label set whose cluster graph is connected, and
/// the input triples lying entirely inside it.
struct Inconsistency {
  std::vector<std::string> labels;
  TripleSet triples;
};

struct BuildResult {
  std::optional<SpeciesTree> tree;
  Inconsistency conflict;

  bool consistent() const { return tree.has_value(); }
};

namespace detail {

class Build {
 public:
  Build(std::span<const std::string> names, std::vector<SpeciesTriple> triples)
      : names_(names), triples_(std::move(triples)), position_(names.size(), 0) {}

  BuildResult run() {
    std::vector<SpeciesIndex> labels(names_.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<SpeciesIndex>(i);
    BuildResult result;
    const auto top = recurse(labels, triples_);
    if (!top) {
      result.conflict = std::move(conflict_);
      return result;
    }
    result.tree = SpeciesTree(std::move(builder_), *top);
    return result;
  }

 private:
  // Labels are sorted; components come out ordered by their smallest label.
  std::optional<TreeBuilder::NodeId> recurse(const std::vector<SpeciesIndex>& labels,
                                             const std::vector<SpeciesTriple>& triples) {
    if (labels.size() == 1) return builder_.add_leaf(names_[labels[0]]);
    for (std::size_t i = 0; i < labels.size(); ++i) position_[labels[i]] = i;
    DisjointSets sets(labels.size());
    for (const auto& t : triples) sets.unite(position_[t.a()], position_[t.b()]);

    std::vector<std::size_t> component_of(labels.size());
    std::vector<std::size_t> component_of_root(labels.size(), labels.size());
    std::vector<std::vector<SpeciesIndex>> components;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const std::size_t r = sets.find(i);
      if (component_of_root[r] == labels.size()) {
        component_of_root[r] = components.size();
        components.emplace_back();
      }
      component_of[i] = component_of_root[r];
      components[component_of[i]].push_back(labels[i]);
    }
    if (components.size() == 1) {
      for (const auto l : labels) conflict_.labels.push_back(names_[l]);
      for (const auto& t : triples) conflict_.triples.emplace(names_[t.a()], names_[t.b()], names_[t.outgroup()]);
      return std::nullopt;
    }

    // A triple survives into a component only if its outgroup is there too;
    // otherwise the split between components already displays it.
    std::vector<std::vector<SpeciesTriple>> parts(components.size());
    for (const auto& t : triples) {
      const std::size_t ca = component_of[position_[t.a()]];
      if (ca == component_of[position_[t.outgroup()]]) parts[ca].push_back(t);
    }
    std::vector<TreeBuilder::NodeId> children;
    for (std::size_t c = 0; c < components.size(); ++c) {
      const auto child = recurse(components[c], parts[c]);
      if (!child) return std::nullopt;
      children.push_back(*child);
    }
    return builder_.add_interior(std::move(children));
  }

  std::span<const std::string> names_;
  std::vector<SpeciesTriple> triples_;
  std::vector<std::size_t> position_;
  TreeBuilder builder_;
  Inconsistency conflict_;
};

}  // namespace detail

/// BUILD over species indices into `universe` (sorted, nonempty).
inline BuildResult build_species_tree(std::span<const std::string> universe, std::vector<SpeciesTriple> triples) {
  if (universe.empty()) throw UsageError("BUILD needs a nonempty species set");
  for (const auto& t : triples) {
    const auto n = static_cast<SpeciesIndex>(universe.size());
    if (t.a() < 0 || t.b() >= n || t.outgroup() < 0 || t.outgroup() >= n) {
      throw InputError("triple label outside the species set");
    }
  }
  return detail::Build(universe, std::move(triples)).run();
}

/// Either a species tree on `universe` displaying every triple, or the
/// label set on which the triples are contradictory. The empty set yields
/// the star tree.
inline BuildResult build_species_tree(const TripleSet& triples, std::vector<std::string> universe) {
  std::sort(universe.begin(), universe.end());
  universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
  auto index = [&](const std::string& name) {
    const auto it = std::lower_bound(universe.begin(), universe.end(), name);
    if (it == universe.end() || *it != name) throw InputError("triple label '" + name + "' is not in the species set");
    return static_cast<SpeciesIndex>(it - universe.begin());
  };
  std::vector<SpeciesTriple> indexed;
  indexed.reserve(triples.size());
  for (const auto& t : triples) indexed.emplace_back(index(t.a()), index(t.b()), index(t.outgroup()));
  if (universe.empty()) throw UsageError("BUILD needs a nonempty species set");
  return detail::Build(universe, std::move(indexed)).run();
}

/// Species set = labels occurring in the triples.
inline BuildResult build_species_tree(const TripleSet& triples) {
  const auto labels = labels_of(triples);
  return build_species_tree(triples, std::vector<std::string>(labels.begin(), labels.end()));
}

inline bool is_consistent(const TripleSet& triples, std::vector<std::string> universe) {
  if (triples.empty()) return true;
  return build_species_tree(triples, std::move(universe)).consistent();
}

inline bool is_consistent(const TripleSet& triples) {
  if (triples.empty()) return true;
  return build_species_tree(triples).consistent();
}

/// True iff contracting any single interior edge of the tree on B loses
/// some triple. The edge above an interior vertex v is needed exactly when
/// some triple ((a,b),c) has lca(a,b) = v and lca(a,b,c) = parent(v).
inline bool check_minor_minimal(const SpeciesTree& species, const TripleSet& triples) {
  const Tree& t = species.tree();
  std::vector<char> needed(t.size(), 0);
  for (const auto& triple : triples) {
    const VertexId a = species.leaf(triple.a());
    const VertexId b = species.leaf(triple.b());
    const VertexId c = species.leaf(triple.outgroup());
    const VertexId ab = t.lca(a, b);
    const VertexId abc = t.lca(ab, c);
    if (ab == abc) throw InputError("tree does not display ((" + triple.a() + "," + triple.b() + ")," +
                                    triple.outgroup() + ")");
    if (t.parent(ab) == abc) needed[ab] = 1;
  }
  for (VertexId v = species.top() + 1; v < static_cast<VertexId>(t.size()); ++v) {
    if (!t.is_leaf(v) && !needed[v]) return false;
  }
  return true;
}

}  // namespace triplerec
