#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "triplerec/error.hpp"
#include "triplerec/gene_tree.hpp"
#include "triplerec/informative.hpp"
#include "triplerec/triple.hpp"

namespace triplerec {

/// Image of a gene vertex: a species vertex, or the species edge
/// [parent(vertex), vertex] named by its lower endpoint.
struct Image {
  enum class Kind : std::uint8_t { kVertex, kEdge };

  Kind kind = Kind::kVertex;
  VertexId vertex = kNoVertex;

  static Image at(VertexId v) { return {Kind::kVertex, v}; }
  static Image above(VertexId v) { return {Kind::kEdge, v}; }
  bool is_edge() const { return kind == Kind::kEdge; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// μ, indexed by gene vertex id.
struct ReconciliationMap {
  std::vector<Image> images;

  const Image& operator[](VertexId v) const { return images[v]; }
  friend bool operator==(const ReconciliationMap&, const ReconciliationMap&) = default;
};

/// The species tree fails to display some triples of 𝔖, so no
/// reconciliation map exists.
class NoSpeciesTree : public Error {
 public:
  explicit NoSpeciesTree(TripleSet offending)
      : Error(message(offending)), offending_(std::move(offending)) {}

  const TripleSet& offending() const { return offending_; }

 private:
  static std::string message(const TripleSet& offending) {
    std::string s = "species tree does not display " + std::to_string(offending.size()) + " informative triple(s):";
    for (const auto& t : offending) s += " ((" + t.a() + "," + t.b() + ")," + t.outgroup() + ")";
    return s;
  }

  TripleSet offending_;
};

/// p ⪯ q in the order on species vertices and edges: x ⪯ [u,v] iff x ⪯ v,
/// [u,v] ⪯ x iff u ⪯ x, [u,v] ⪯ [a,b] iff v ⪯ b.
inline bool precedes_or_equal(const Tree& s, Image p, Image q) {
  if (p.is_edge() && !q.is_edge()) return s.is_below_or_equal(s.parent(p.vertex), q.vertex);
  return s.is_below_or_equal(p.vertex, q.vertex);
}

inline bool strictly_precedes(const Tree& s, Image p, Image q) { return p != q && precedes_or_equal(s, p, q); }

/// Least upper bound of two vertex-or-edge elements. The vertex w =
/// lca(bottom(p), bottom(q)) is an upper bound unless one of p, q is the
/// edge entering w, in which case that edge is.
inline Image lca(const Tree& s, Image p, Image q) {
  const VertexId w = s.lca(p.vertex, q.vertex);
  if ((p.is_edge() && p.vertex == w) || (q.is_edge() && q.vertex == w)) return Image::above(w);
  return Image::at(w);
}

inline std::string to_string(const Tree& s, Image img) {
  if (!img.is_edge()) return std::to_string(img.vertex);
  return "[" + std::to_string(s.parent(img.vertex)) + "," + std::to_string(img.vertex) + "]";
}

namespace detail {

// species index of the gene tree -> leaf vertex of S
inline std::vector<VertexId> species_leaves(const GeneTree& gene, const SpeciesTree& species, bool strict) {
  std::vector<VertexId> out;
  for (const auto& name : gene.species_names()) {
    const VertexId v = species.find_leaf(name);
    if (v == kNoVertex && strict) throw InputError("species '" + name + "' is not a leaf of the species tree");
    out.push_back(v);
  }
  return out;
}

// lca_S(σ(L(x))) for every gene vertex; kNoVertex where a species is unknown.
inline std::vector<VertexId> species_lcas(const GeneTree& gene, const SpeciesTree& species,
                                          const std::vector<VertexId>& leaf_of) {
  const Tree& t = gene.tree();
  const Tree& s = species.tree();
  std::vector<VertexId> out(t.size(), kNoVertex);
  std::vector<char> unknown(t.size(), 0);
  for (VertexId v = static_cast<VertexId>(t.size()); v-- > 0;) {
    if (t.is_leaf(v)) {
      out[v] = leaf_of[gene.species(v)];
      unknown[v] = out[v] == kNoVertex;
    } else {
      for (const VertexId c : t.children(v)) {
        if (unknown[c]) unknown[v] = 1;
        if (!unknown[v]) out[v] = out[v] == kNoVertex ? out[c] : s.lca(out[v], out[c]);
      }
      if (unknown[v]) out[v] = kNoVertex;
    }
  }
  return out;
}

inline bool edge_ok(const GeneTree& gene, const Tree& s, const ReconciliationMap& mu, VertexId child) {
  const VertexId parent = gene.tree().parent(child);
  const bool both_dup = gene.is_duplication(child) && gene.is_duplication(parent);
  return both_dup ? precedes_or_equal(s, mu[child], mu[parent]) : strictly_precedes(s, mu[child], mu[parent]);
}

}  // namespace detail

struct ReconcileOptions {
  /// Skip the condition (C) check.
  bool force = false;
};

/// Builds μ: leaves to σ(x), speciations to lca_S(σ(L(x))), duplications to
/// the edge entering lca_S(σ(L(x))). Runs in O(|V|) lca queries after an
/// O(|V||B|/64) check of (C). Throws NoSpeciesTree, listing the triples of
/// 𝔖 that S fails to display, when no map exists.
inline ReconciliationMap construct_mu(const GeneTree& gene, const SpeciesTree& species, ReconcileOptions options = {}) {
  const auto leaf_of = detail::species_leaves(gene, species, true);
  if (!options.force) {
    const auto violations = validate_condition_c(gene);
    if (!violations.empty()) {
      std::string msg = "condition (C) violated:";
      for (const auto& v : violations) msg += "\n  " + describe(v);
      throw InputError(msg);
    }
  }
  const Tree& t = gene.tree();
  const Tree& s = species.tree();
  const auto lcas = detail::species_lcas(gene, species, leaf_of);
  ReconciliationMap mu;
  mu.images.resize(t.size());
  for (VertexId v = 0; v < static_cast<VertexId>(t.size()); ++v) {
    mu.images[v] = gene.is_duplication(v) ? Image::above(lcas[v]) : Image::at(lcas[v]);
  }

  // μ satisfies every axiom iff it is order-compatible along gene edges and
  // no speciation lands on a species leaf. When S displays 𝔖 this always
  // holds, so a failure here is exactly the case where 𝔖 is not displayed.
  bool ok = true;
  for (VertexId v = 0; v < static_cast<VertexId>(t.size()) && ok; ++v) {
    if (gene.is_speciation(v) && s.is_leaf(lcas[v])) ok = false;
    if (v != t.root() && !detail::edge_ok(gene, s, mu, v)) ok = false;
  }
  TripleSet offending;
  if (!ok || options.force) {
    const auto names = gene.species_names();
    for (const auto& tr : species_triples_indexed(gene, {Enumeration::kVertexDriven, true})) {
      if (!displays(s, leaf_of[tr.a()], leaf_of[tr.b()], leaf_of[tr.outgroup()])) {
        offending.emplace(names[tr.a()], names[tr.b()], names[tr.outgroup()]);
      }
    }
  }
  if (!offending.empty()) throw NoSpeciesTree(std::move(offending));
  if (!ok) throw InputError("no reconciliation map exists (condition (C) does not hold)");
  return mu;
}

/// A failed reconciliation-map requirement.
struct MapViolation {
  std::string rule;
  VertexId gene_vertex = kNoVertex;
  VertexId other = kNoVertex;
  std::string detail;
};

struct ValidateOptions {
  /// Also check lca_S(μ(x), μ(y)) ⪯ μ(lca_T(x, y)) for all vertex pairs
  /// (quadratic in |V|).
  bool pairwise_lca = true;
};

/// Checks a candidate map against every reconciliation-map requirement.
/// Rule names:
///   bad-image          image missing or not an element of S
///   leaf-image         leaf not mapped to its species
///   speciation-vertex  speciation not mapped to an interior vertex
///   duplication-edge   duplication not mapped to an edge
///   duplication-order  nested duplications out of order (⪯)
///   strict-order       other ancestor pairs not strictly ordered (≺)
///   speciation-lca     speciation not mapped to lca_S(σ(L(x)))
///   vertex-image-lca   vertex image differs from lca_S(σ(L(x)))
///   edge-above-lca     edge image not strictly above lca_S(σ(L(x)))
///   root-image         something mapped to ρ_S
///   lca-monotone       lca_S(μ(x), μ(y)) not below μ(lca_T(x, y))
/// An empty result means `mu` is a reconciliation map.
inline std::vector<MapViolation> validate_mu(const GeneTree& gene, const SpeciesTree& species,
                                             const ReconciliationMap& mu, ValidateOptions options = {}) {
  const Tree& t = gene.tree();
  const Tree& s = species.tree();
  std::vector<MapViolation> out;
  const auto n = static_cast<VertexId>(t.size());
  const auto s_size = static_cast<VertexId>(s.size());
  if (mu.images.size() != t.size()) {
    out.push_back({"bad-image", kNoVertex, kNoVertex,
                   "map has " + std::to_string(mu.images.size()) + " entries for " + std::to_string(t.size()) +
                       " gene vertices"});
    return out;
  }
  for (VertexId x = 0; x < n; ++x) {
    const Image img = mu[x];
    if (img.vertex < 0 || img.vertex >= s_size || (img.is_edge() && img.vertex == species.rho())) {
      out.push_back({"bad-image", x, kNoVertex, "not a vertex or edge of the species tree"});
    }
  }
  if (!out.empty()) return out;

  const auto leaf_of = detail::species_leaves(gene, species, false);
  const auto lcas = detail::species_lcas(gene, species, leaf_of);
  for (VertexId x = 0; x < n; ++x) {
    const Image img = mu[x];
    const std::string shown = to_string(s, img);
    if (!img.is_edge() && img.vertex == species.rho()) out.push_back({"root-image", x, kNoVertex, shown});
    switch (gene.event(x)) {
      case Event::kExtant:
        if (img.is_edge() || leaf_of[gene.species(x)] == kNoVertex || img.vertex != leaf_of[gene.species(x)]) {
          out.push_back({"leaf-image", x, kNoVertex, shown + " is not species " + gene.species_name(x)});
        }
        break;
      case Event::kSpeciation:
        if (img.is_edge() || s.is_leaf(img.vertex)) out.push_back({"speciation-vertex", x, kNoVertex, shown});
        if (img != Image::at(lcas[x])) {
          out.push_back({"speciation-lca", x, kNoVertex, shown + " != " + std::to_string(lcas[x])});
        }
        break;
      case Event::kDuplication:
        if (!img.is_edge()) out.push_back({"duplication-edge", x, kNoVertex, shown});
        break;
      case Event::kLoss:
        out.push_back({"bad-image", x, kNoVertex, "loss vertex in an observable gene tree"});
        break;
    }
    if (lcas[x] != kNoVertex) {
      if (!img.is_edge() && img.vertex != lcas[x]) {
        out.push_back({"vertex-image-lca", x, kNoVertex, shown + " != " + std::to_string(lcas[x])});
      }
      if (img.is_edge() && !strictly_precedes(s, Image::at(lcas[x]), img)) {
        out.push_back({"edge-above-lca", x, kNoVertex, shown + " not above " + std::to_string(lcas[x])});
      }
    }
    for (VertexId y = x == t.root() ? kNoVertex : t.parent(x); y != kNoVertex;
         y = y == t.root() ? kNoVertex : t.parent(y)) {
      if (gene.is_duplication(x) && gene.is_duplication(y)) {
        if (!precedes_or_equal(s, img, mu[y])) {
          out.push_back({"duplication-order", x, y, shown + " not below " + to_string(s, mu[y])});
        }
      } else if (!strictly_precedes(s, img, mu[y])) {
        out.push_back({"strict-order", x, y, shown + " not strictly below " + to_string(s, mu[y])});
      }
    }
  }
  if (options.pairwise_lca) {
    for (VertexId x = 0; x < n; ++x) {
      for (VertexId y = x + 1; y < n; ++y) {
        const Image joined = lca(s, mu[x], mu[y]);
        const Image above = mu[t.lca(x, y)];
        if (!precedes_or_equal(s, joined, above)) {
          out.push_back({"lca-monotone", x, y, to_string(s, joined) + " not below " + to_string(s, above)});
        }
      }
    }
  }
  return out;
}

/// Lazily enumerates reconciliation maps that differ only in where the
/// duplications sit. Speciation and leaf images are fixed; a duplication x
/// may use any edge [u,v] with lca_S(σ(L(x))) ⪯ v that respects the images
/// already chosen for its ancestors. Nested duplications may share an edge.
class PlacementEnumerator {
 public:
  PlacementEnumerator(const GeneTree& gene, const SpeciesTree& species, ReconcileOptions options = {})
      : gene_(&gene), species_(&species), base_(construct_mu(gene, species, options)) {
    for (VertexId v = 0; v < static_cast<VertexId>(gene.tree().size()); ++v) {
      if (gene.is_duplication(v)) duplications_.push_back(v);
    }
    candidates_.resize(duplications_.size());
    choice_.assign(duplications_.size(), 0);
    current_ = base_;
    fill_from(0);
  }

  std::optional<ReconciliationMap> next() {
    if (done_) return std::nullopt;
    if (!started_) {
      started_ = true;
      return current_;
    }
    std::size_t level = duplications_.size();
    while (level > 0) {
      --level;
      if (choice_[level] + 1 < candidates_[level].size()) {
        ++choice_[level];
        current_.images[duplications_[level]] = Image::above(candidates_[level][choice_[level]]);
        fill_from(level + 1);
        return current_;
      }
    }
    done_ = true;
    return std::nullopt;
  }

 private:
  // Duplications are in preorder, so every ancestor precedes its
  // descendants and has already been placed.
  void fill_from(std::size_t level) {
    const Tree& t = gene_->tree();
    const Tree& s = species_->tree();
    for (std::size_t i = level; i < duplications_.size(); ++i) {
      const VertexId x = duplications_[i];
      auto& options = candidates_[i];
      options.clear();
      VertexId limit = species_->top();  // inclusive
      bool inclusive = true;
      if (x != t.root()) {
        const VertexId p = t.parent(x);
        limit = current_[p].vertex;
        inclusive = gene_->is_duplication(p);
      }
      for (VertexId v = base_[x].vertex;; v = s.parent(v)) {
        if (v == limit) {
          if (inclusive) options.push_back(v);
          break;
        }
        options.push_back(v);
        if (v == species_->top()) break;
      }
      choice_[i] = 0;
      current_.images[x] = Image::above(options.front());
    }
  }

  const GeneTree* gene_;
  const SpeciesTree* species_;
  ReconciliationMap base_;
  ReconciliationMap current_;
  std::vector<VertexId> duplications_;
  std::vector<std::vector<VertexId>> candidates_;
  std::vector<std::size_t> choice_;
  bool started_ = false;
  bool done_ = false;
};

/// Up to `limit` maps from PlacementEnumerator.
inline std::vector<ReconciliationMap> enumerate_duplication_placements(const GeneTree& gene, const SpeciesTree& species,
                                                                       std::size_t limit,
                                                                       ReconcileOptions options = {}) {
  PlacementEnumerator it(gene, species, options);
  std::vector<ReconciliationMap> out;
  while (out.size() < limit) {
    auto mu = it.next();
    if (!mu) break;
    out.push_back(std::move(*mu));
  }
  return out;
}

/// `geneVertex <TAB> V <TAB> speciesVertex` or
/// `geneVertex <TAB> E <TAB> parent/child`.
inline std::string to_tsv(const ReconciliationMap& mu, const SpeciesTree& species) {
  std::string out;
  for (std::size_t x = 0; x < mu.images.size(); ++x) {
    const Image img = mu.images[x];
    out += std::to_string(x);
    if (img.is_edge()) {
      out += "\tE\t" + std::to_string(species.tree().parent(img.vertex)) + "/" + std::to_string(img.vertex);
    } else {
      out += "\tV\t" + std::to_string(img.vertex);
    }
    out += '\n';
  }
  return out;
}

/// Reads a map TSV. Rows may come in any order; gene vertices without a row
/// keep an invalid image, which validate_mu reports.
inline ReconciliationMap parse_map_tsv(std::string_view text, const SpeciesTree& species) {
  ReconciliationMap mu;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<char> seen;
  const auto s_size = static_cast<long long>(species.tree().size());
  auto parse_id = [&](const std::string& s) -> long long {
    if (s.empty() || s.size() > 9 || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ParseError(line_no, "expected a vertex id, got '" + s + "'", "line");
    }
    return std::stoll(s);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 3) throw ParseError(line_no, "expected three tab-separated columns", "line");
    const auto x = static_cast<std::size_t>(parse_id(cols[0]));
    Image img;
    if (cols[1] == "V") {
      const long long v = parse_id(cols[2]);
      if (v >= s_size) throw ParseError(line_no, "species vertex out of range", "line");
      img = Image::at(static_cast<VertexId>(v));
    } else if (cols[1] == "E") {
      const auto slash = cols[2].find('/');
      if (slash == std::string::npos) throw ParseError(line_no, "edge must be written parent/child", "line");
      const long long u = parse_id(cols[2].substr(0, slash));
      const long long v = parse_id(cols[2].substr(slash + 1));
      if (v >= s_size || v == 0 || species.tree().parent(static_cast<VertexId>(v)) != u) {
        throw ParseError(line_no, "not an edge of the species tree: " + cols[2], "line");
      }
      img = Image::above(static_cast<VertexId>(v));
    } else {
      throw ParseError(line_no, "kind must be V or E", "line");
    }
    if (x >= mu.images.size()) {
      mu.images.resize(x + 1);
      seen.resize(x + 1, 0);
    }
    if (seen[x]) throw ParseError(line_no, "gene vertex listed twice", "line");
    seen[x] = 1;
    mu.images[x] = img;
  }
  return mu;
}

}  // namespace triplerec
