#pragma once

#include <algorithm>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "triplerec/error.hpp"
#include "triplerec/gene_tree.hpp"
#include "triplerec/newick.hpp"
#include "triplerec/triple.hpp"

namespace triplerec {

/// Two children of a speciation vertex whose subtrees share species.
struct ConditionViolation {
  VertexId vertex;
  VertexId first_child;
  VertexId second_child;
  std::vector<std::string> shared_species;
};

/// Checks condition (C): below every speciation vertex, distinct child
/// subtrees have disjoint species sets. Empty result means (C) holds.
inline std::vector<ConditionViolation> validate_condition_c(const GeneTree& gene) {
  const Tree& t = gene.tree();
  const BitRows sets = species_sets(gene);
  std::vector<ConditionViolation> out;
  for (VertexId v = 0; v < static_cast<VertexId>(t.size()); ++v) {
    if (!gene.is_speciation(v)) continue;
    const auto kids = t.children(v);
    for (std::size_t i = 0; i < kids.size(); ++i) {
      for (std::size_t j = i + 1; j < kids.size(); ++j) {
        if (!sets.intersects(kids[i], kids[j])) continue;
        ConditionViolation violation{v, kids[i], kids[j], {}};
        for (const auto s : sets.members(kids[i])) {
          if (sets.test(kids[j], s)) violation.shared_species.push_back(gene.species_names()[s]);
        }
        out.push_back(std::move(violation));
      }
    }
  }
  return out;
}

/// Pairs of distinct genes in one species whose lca is a speciation. Under
/// (C) there are none; the two checks flag the same documents.
inline std::vector<std::pair<VertexId, VertexId>> orthologous_same_species_pairs(const GeneTree& gene) {
  const Tree& t = gene.tree();
  std::vector<std::pair<VertexId, VertexId>> out;
  const auto leaves = t.leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    for (std::size_t j = i + 1; j < leaves.size(); ++j) {
      if (gene.species(leaves[i]) == gene.species(leaves[j]) && gene.is_speciation(t.lca(leaves[i], leaves[j]))) {
        out.emplace_back(leaves[i], leaves[j]);
      }
    }
  }
  return out;
}

inline std::string describe(const ConditionViolation& v) {
  std::string s = "speciation vertex " + std::to_string(v.vertex) + ": children " + std::to_string(v.first_child) +
                  " and " + std::to_string(v.second_child) + " share species";
  for (const auto& sp : v.shared_species) s += " " + sp;
  return s;
}

enum class Enumeration {
  kLeafSubsets,   // every 3-subset of leaves, filtered; the literal definition
  kVertexDriven,  // leaf pairs grouped below each speciation vertex
};

struct ExtractOptions {
  Enumeration enumeration = Enumeration::kVertexDriven;
  /// Proceed even if (C) is violated.
  bool force = false;
};

using SpeciesTriple = BasicTriple<SpeciesIndex>;

namespace detail {

inline void require_condition_c(const GeneTree& gene, const ExtractOptions& options) {
  if (options.force) return;
  const auto violations = validate_condition_c(gene);
  if (violations.empty()) return;
  std::string msg = "condition (C) violated:";
  for (const auto& v : violations) msg += "\n  " + describe(v);
  throw InputError(msg);
}

// Calls fn(x, y, z) for every gene-leaf triple ((x,y),z) of 𝔊.
template <class Fn>
void for_each_gene_triple(const GeneTree& gene, Enumeration enumeration, Fn&& fn) {
  const Tree& t = gene.tree();
  const auto leaves = t.leaves();
  if (enumeration == Enumeration::kLeafSubsets) {
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      for (std::size_t j = i + 1; j < leaves.size(); ++j) {
        for (std::size_t k = j + 1; k < leaves.size(); ++k) {
          const VertexId x = leaves[i], y = leaves[j], z = leaves[k];
          const auto sx = gene.species(x), sy = gene.species(y), sz = gene.species(z);
          if (sx == sy || sx == sz || sy == sz) continue;
          const VertexId xy = t.lca(x, y), xz = t.lca(x, z), yz = t.lca(y, z);
          const VertexId root = t.lca(xy, z);
          if (!gene.is_speciation(root)) continue;
          if (xy != root) {
            fn(x, y, z);
          } else if (xz != root) {
            fn(x, z, y);
          } else if (yz != root) {
            fn(y, z, x);
          }
        }
      }
    }
    return;
  }
  for (VertexId v = 0; v < static_cast<VertexId>(t.size()); ++v) {
    if (!gene.is_speciation(v)) continue;
    for (const VertexId c : t.children(v)) {
      const auto inside = t.leaves_below(c);
      const auto all = t.leaves_below(v);
      for (std::size_t i = 0; i < inside.size(); ++i) {
        for (std::size_t j = i + 1; j < inside.size(); ++j) {
          const VertexId x = inside[i], y = inside[j];
          if (gene.species(x) == gene.species(y)) continue;
          for (const VertexId z : all) {
            if (z >= c && z < t.subtree_end(c)) continue;
            if (gene.species(z) == gene.species(x) || gene.species(z) == gene.species(y)) continue;
            fn(x, y, z);
          }
        }
      }
    }
  }
}

}  // namespace detail

/// 𝔊(T,t,σ) over gene ids: displayed triples rooted at a speciation whose
/// three leaves lie in pairwise distinct species.
inline TripleSet extract_gene_triples(const GeneTree& gene, ExtractOptions options = {}) {
  detail::require_condition_c(gene, options);
  TripleSet out;
  const Tree& t = gene.tree();
  detail::for_each_gene_triple(gene, options.enumeration,
                               [&](VertexId x, VertexId y, VertexId z) { out.emplace(t.label(x), t.label(y), t.label(z)); });
  return out;
}

/// 𝔖(T,t,σ) over species indices, sorted. The vertex-driven route works on
/// species sets directly: for a speciation vertex v and child c, it emits
/// ((a,b),d) for a ≠ b in σ(L(c)) and d in σ(L(c')) for a sibling c',
/// d ∉ {a,b}.
inline std::vector<SpeciesTriple> species_triples_indexed(const GeneTree& gene, ExtractOptions options = {}) {
  detail::require_condition_c(gene, options);
  const std::size_t n = gene.species_count();
  const bool dense = n <= 512;
  std::vector<std::uint64_t> bitmap(dense ? (n * n * n + 63) / 64 : 0, 0);
  std::unordered_set<std::uint64_t> sparse;
  auto mark = [&](std::size_t a, std::size_t b, std::size_t d) {
    if (a > b) std::swap(a, b);
    const std::uint64_t key = (static_cast<std::uint64_t>(a) * n + b) * n + d;
    if (dense) {
      bitmap[key / 64] |= std::uint64_t{1} << (key % 64);
    } else {
      sparse.insert(key);
    }
  };

  if (options.enumeration == Enumeration::kLeafSubsets) {
    detail::for_each_gene_triple(gene, Enumeration::kLeafSubsets, [&](VertexId x, VertexId y, VertexId z) {
      mark(static_cast<std::size_t>(gene.species(x)), static_cast<std::size_t>(gene.species(y)),
           static_cast<std::size_t>(gene.species(z)));
    });
  } else {
    const Tree& t = gene.tree();
    const BitRows sets = species_sets(gene);
    BitRows others(1, n);
    for (VertexId v = 0; v < static_cast<VertexId>(t.size()); ++v) {
      if (!gene.is_speciation(v)) continue;
      const auto kids = t.children(v);
      for (const VertexId c : kids) {
        const auto inside = sets.members(c);
        if (inside.size() < 2) continue;
        auto row = others.row(0);
        std::fill(row.begin(), row.end(), 0);
        for (const VertexId sibling : kids) {
          if (sibling == c) continue;
          const auto src = sets.row(sibling);
          for (std::size_t w = 0; w < row.size(); ++w) row[w] |= src[w];
        }
        const auto outside = others.members(0);
        for (std::size_t i = 0; i < inside.size(); ++i) {
          for (std::size_t j = i + 1; j < inside.size(); ++j) {
            for (const auto d : outside) {
              if (d != inside[i] && d != inside[j]) mark(inside[i], inside[j], d);
            }
          }
        }
      }
    }
  }

  std::vector<SpeciesTriple> out;
  auto decode = [&](std::uint64_t key) {
    const auto d = static_cast<SpeciesIndex>(key % n);
    const auto b = static_cast<SpeciesIndex>((key / n) % n);
    const auto a = static_cast<SpeciesIndex>(key / n / n);
    out.emplace_back(a, b, d);
  };
  if (dense) {
    for (std::size_t w = 0; w < bitmap.size(); ++w) {
      std::uint64_t bits = bitmap[w];
      while (bits != 0) {
        decode(w * 64 + static_cast<std::uint64_t>(std::countr_zero(bits)));
        bits &= bits - 1;
      }
    }
  } else {
    for (const auto key : sparse) decode(key);
    std::sort(out.begin(), out.end());
  }
  return out;
}

/// 𝔖(T,t,σ) = σ(𝔊) with species names.
inline TripleSet extract_species_triples(const GeneTree& gene, ExtractOptions options = {}) {
  TripleSet out;
  const auto names = gene.species_names();
  for (const auto& t : species_triples_indexed(gene, options)) {
    out.emplace(names[t.a()], names[t.b()], names[t.outgroup()]);
  }
  return out;
}

/// Three columns `a b c` meaning ((a,b),c), ingroup sorted.
inline std::string to_tsv(const TripleSet& triples) {
  std::string out;
  for (const auto& t : triples) {
    out += t.a();
    out += '\t';
    out += t.b();
    out += '\t';
    out += t.outgroup();
    out += '\n';
  }
  return out;
}

inline TripleSet parse_triples_tsv(std::string_view text) {
  TripleSet out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string a, b, c, extra;
    if (!(fields >> a >> b >> c) || (fields >> extra)) {
      throw ParseError(line_no, "expected three columns", "line");
    }
    if (!newick::valid_name(a) || !newick::valid_name(b) || !newick::valid_name(c)) {
      throw ParseError(line_no, "invalid label", "line");
    }
    if (a == b || a == c || b == c) throw ParseError(line_no, "triple labels must be pairwise distinct", "line");
    out.emplace(a, b, c);
  }
  return out;
}

}  // namespace triplerec
