#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "triplerec/error.hpp"
#include "triplerec/gene_tree.hpp"
#include "triplerec/newick.hpp"
#include "triplerec/random.hpp"
#include "triplerec/triple.hpp"

namespace triplerec {

/// Spreadsheet-style species names: A..Z, AA, AB, ...
inline std::string species_label(std::size_t i) {
  std::string s;
  ++i;
  while (i > 0) {
    --i;
    s.insert(s.begin(), static_cast<char>('A' + i % 26));
    i /= 26;
  }
  return s;
}

/// Picks which extant lineage speciates next. `ages[i]` is the number of
/// speciation steps since lineage i was created, at least 1.
using LineagePicker = std::function<std::size_t(std::span<const double> ages, Rng& rng)>;

/// Age model: a lineage splits with probability proportional to 1/age, so
/// young lineages split sooner and trees come out balanced.
inline LineagePicker age_model() {
  return [](std::span<const double> ages, Rng& rng) {
    std::vector<double> weights(ages.size());
    std::transform(ages.begin(), ages.end(), weights.begin(), [](double a) { return 1.0 / a; });
    return std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng);
  };
}

/// Pure Yule: every lineage equally likely.
inline LineagePicker yule_model() {
  return [](std::span<const double> ages, Rng& rng) {
    return std::uniform_int_distribution<std::size_t>(0, ages.size() - 1)(rng);
  };
}

/// Rooted binary ultrametric species tree on n species. The k-th split
/// (k = 0..n-2) happens at time k/(n-1) and leaves sit at time 1, so every
/// root-to-leaf path has length 1. The synthetic edge above the root gets
/// length 1/(n-1).
inline SpeciesTree gen_species_tree(std::size_t n, std::uint64_t seed, const LineagePicker& pick = age_model()) {
  if (n < 2) throw UsageError("species tree needs at least 2 species");
  Rng rng(seed);
  struct Node {
    std::vector<std::size_t> children;
    double time = 1.0;
  };
  std::vector<Node> nodes(1);
  std::vector<std::size_t> lineages{0};
  std::vector<std::size_t> born{0};
  std::vector<double> ages;
  const double steps = static_cast<double>(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    ages.resize(lineages.size());
    for (std::size_t i = 0; i < lineages.size(); ++i) ages[i] = static_cast<double>(k - born[i] + 1);
    const std::size_t i = pick(ages, rng);
    const std::size_t splitting = lineages[i];
    nodes[splitting].time = static_cast<double>(k) / steps;
    for (int d = 0; d < 2; ++d) {
      nodes[splitting].children.push_back(nodes.size());
      nodes.emplace_back();
    }
    lineages[i] = nodes[splitting].children[0];
    born[i] = k + 1;
    lineages.push_back(nodes[splitting].children[1]);
    born.push_back(k + 1);
  }

  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = species_label(i);
  std::shuffle(names.begin(), names.end(), rng);

  // Nodes were created parent-first; walking ids backwards builds children
  // before their parents.
  TreeBuilder builder;
  std::vector<TreeBuilder::NodeId> built(nodes.size());
  std::vector<double> parent_time(nodes.size(), -1.0 / steps);
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    for (const auto c : nodes[id].children) parent_time[c] = nodes[id].time;
  }
  std::size_t next_name = 0;
  for (std::size_t id = nodes.size(); id-- > 0;) {
    const double length = nodes[id].time - parent_time[id];
    if (nodes[id].children.empty()) {
      built[id] = builder.add_leaf(names[next_name++], length);
    } else {
      std::vector<TreeBuilder::NodeId> kids;
      for (const auto c : nodes[id].children) kids.push_back(built[c]);
      built[id] = builder.add_interior(std::move(kids), length);
    }
  }
  return SpeciesTree(std::move(builder), built[0]);
}

/// The complete simulated gene history including losses. Per vertex:
/// species_vertex is the species vertex for speciations and extant genes,
/// and the lower endpoint of the species edge for duplications and losses
/// (together this is the true reconciliation). time is measured from the
/// top of the synthetic edge.
struct TrueGeneTree {
  Tree tree;
  std::vector<Event> events;
  std::vector<VertexId> species_vertex;
  std::vector<double> time;
};

/// Debug Newick of a true gene tree: extant leaves `gene@species`, losses
/// as `L`, interior vertices `S`/`D`. Not parseable as a gene tree.
inline std::string to_debug_newick(const TrueGeneTree& truth, const SpeciesTree& species) {
  std::string out;
  newick::write_subtree(
      truth.tree, truth.tree.root(), out,
      [&](VertexId v, std::string& s) {
        if (truth.events[v] == Event::kLoss) {
          s += 'L';
        } else {
          s += truth.tree.label(v) + "@" + species.tree().label(truth.species_vertex[v]);
        }
      },
      [&](VertexId v, std::string& s) { s += event_code(truth.events[v]); });
  out += ';';
  return out;
}

struct Scenario {
  SpeciesTree species;
  TrueGeneTree true_gene;
  GeneTree observable;
  double dup_rate = 0.0;
  double loss_rate = 0.0;
  std::uint64_t seed = 0;
  int attempts = 0;
  std::size_t duplications = 0;
  std::size_t losses = 0;
};

namespace detail {

struct HistoryNode {
  Event event;
  VertexId species_vertex;
  double time;
  std::vector<std::size_t> children;
};

struct PendingEvent {
  double position;
  Event event;
  bool operator<(const PendingEvent& o) const { return position < o.position; }
};

// One gene lineage travelling down the species edge above `edge`, starting
// at `position`, with its remaining events in time order.
struct Lineage {
  std::size_t parent;  // history node or npos for the very first lineage
  VertexId edge;
  double position;
  std::vector<PendingEvent> events;
};

inline constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

inline std::vector<PendingEvent> draw_events(double from, double to, double dup_rate, double loss_rate, Rng& rng) {
  std::vector<PendingEvent> out;
  const double span = to - from;
  if (span <= 0.0) return out;
  const auto dups = dup_rate > 0.0 ? std::poisson_distribution<int>(dup_rate * span)(rng) : 0;
  const auto losses = loss_rate > 0.0 ? std::poisson_distribution<int>(loss_rate * span)(rng) : 0;
  std::uniform_real_distribution<double> where(from, to);
  for (int i = 0; i < dups; ++i) out.push_back({where(rng), Event::kDuplication});
  for (int i = 0; i < losses; ++i) out.push_back({where(rng), Event::kLoss});
  std::sort(out.begin(), out.end());
  return out;
}

// One forward simulation; empty history nodes only if the root lineage is
// lost immediately.
inline std::vector<HistoryNode> simulate_history(const SpeciesTree& species, double dup_rate, double loss_rate,
                                                 Rng& rng) {
  const Tree& s = species.tree();
  std::vector<double> start_time(s.size(), 0.0);
  auto edge_length = [&](VertexId v) { return s.length(v).value_or(0.0); };
  for (VertexId v = 1; v < static_cast<VertexId>(s.size()); ++v) {
    start_time[v] = v == species.top() ? 0.0 : start_time[s.parent(v)] + edge_length(s.parent(v));
  }

  std::vector<HistoryNode> nodes;
  auto attach = [&](std::size_t parent, HistoryNode node) {
    nodes.push_back(std::move(node));
    if (parent != kNoParent) nodes[parent].children.push_back(nodes.size() - 1);
    return nodes.size() - 1;
  };
  std::vector<Lineage> work;
  const VertexId top = species.top();
  work.push_back({kNoParent, top, 0.0, draw_events(0.0, edge_length(top), dup_rate, loss_rate, rng)});
  while (!work.empty()) {
    Lineage lin = std::move(work.back());
    work.pop_back();
    const double length = edge_length(lin.edge);
    if (!lin.events.empty()) {
      const PendingEvent e = lin.events.front();
      const double when = start_time[lin.edge] + e.position;
      const std::size_t id = attach(lin.parent, {e.event, lin.edge, when, {}});
      if (e.event == Event::kDuplication) {
        lin.events.erase(lin.events.begin());
        work.push_back({id, lin.edge, e.position, draw_events(e.position, length, dup_rate, loss_rate, rng)});
        work.push_back({id, lin.edge, e.position, std::move(lin.events)});
      }
      continue;
    }
    const double when = start_time[lin.edge] + length;
    if (s.is_leaf(lin.edge)) {
      attach(lin.parent, {Event::kExtant, lin.edge, when, {}});
      continue;
    }
    const std::size_t id = attach(lin.parent, {Event::kSpeciation, lin.edge, when, {}});
    const auto kids = s.children(lin.edge);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
      work.push_back({id, *it, 0.0, draw_events(0.0, edge_length(*it), dup_rate, loss_rate, rng)});
    }
  }
  return nodes;
}

}  // namespace detail

/// Runs one gene family down `species`: each lineage on an edge of length
/// ℓ draws Poisson(r_d·ℓ) duplications and Poisson(r_l·ℓ) losses at uniform
/// positions; a duplication forks the lineage (the new copy draws its own
/// events for the rest of the edge), a loss ends it, and every species
/// vertex splits each surviving lineage. Histories leaving some species
/// without genes are discarded; attempt j uses derive_seed(seed, 1, j).
inline Scenario evolve_gene_tree(const SpeciesTree& species, double dup_rate, double loss_rate, std::uint64_t seed,
                                 int max_retries = 1000) {
  if (!(dup_rate >= 0.0 && dup_rate <= 1.0 && loss_rate >= 0.0 && loss_rate <= 1.0)) {
    throw UsageError("rates must lie in [0, 1]");
  }
  if (max_retries < 1) throw UsageError("max_retries must be positive");
  const Tree& s = species.tree();
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Rng rng(derive_seed(seed, 1, static_cast<std::uint64_t>(attempt)));
    auto nodes = detail::simulate_history(species, dup_rate, loss_rate, rng);

    std::vector<std::size_t> per_species(s.size(), 0);
    for (const auto& n : nodes) {
      if (n.event == Event::kExtant) ++per_species[n.species_vertex];
    }
    const bool covered = std::all_of(s.leaves().begin(), s.leaves().end(),
                                     [&](VertexId leaf) { return per_species[leaf] > 0; });
    if (!covered || nodes.empty()) continue;

    Scenario out;
    out.species = species;
    out.dup_rate = dup_rate;
    out.loss_rate = loss_rate;
    out.seed = seed;
    out.attempts = attempt + 1;

    TreeBuilder builder;
    std::vector<TreeBuilder::NodeId> built(nodes.size());
    std::vector<std::size_t> gene_counter(s.size(), 0);
    std::vector<std::string> extant;
    std::size_t loss_counter = 0;
    for (std::size_t id = nodes.size(); id-- > 0;) {
      const auto& n = nodes[id];
      if (n.event == Event::kExtant) {
        std::string name = s.label(n.species_vertex) + "_" + std::to_string(++gene_counter[n.species_vertex]);
        extant.push_back(name);
        built[id] = builder.add_leaf(std::move(name));
      } else if (n.event == Event::kLoss) {
        built[id] = builder.add_leaf("loss" + std::to_string(++loss_counter));
        ++out.losses;
      } else {
        std::vector<TreeBuilder::NodeId> kids;
        for (const auto c : n.children) kids.push_back(built[c]);
        built[id] = builder.add_interior(std::move(kids));
        if (n.event == Event::kDuplication) ++out.duplications;
      }
    }
    auto tree = builder.build(built[0]);
    TrueGeneTree& truth = out.true_gene;
    truth.events.resize(tree.tree.size());
    truth.species_vertex.resize(tree.tree.size());
    truth.time.resize(tree.tree.size());
    for (std::size_t id = 0; id < nodes.size(); ++id) {
      const VertexId v = tree.vertex_of[built[id]];
      truth.events[v] = nodes[id].event;
      truth.species_vertex[v] = nodes[id].species_vertex;
      truth.time[v] = nodes[id].time;
    }
    truth.tree = std::move(tree.tree);

    auto observed = restrict_to(truth.tree, extant);
    std::vector<Event> events(observed.tree.size());
    std::vector<std::string> sigma(observed.tree.size());
    for (VertexId v = 0; v < static_cast<VertexId>(observed.tree.size()); ++v) {
      const VertexId orig = observed.origin[v];
      events[v] = truth.events[orig];
      if (observed.tree.is_leaf(v)) sigma[v] = s.label(truth.species_vertex[orig]);
    }
    out.observable = GeneTree(std::move(observed.tree), std::move(events), sigma);
    return out;
  }
  throw SimulationError(max_retries, "every simulated gene tree lost all genes of some species");
}

/// Species tree from derive_seed(seed, 0, 0), then the gene family.
inline Scenario simulate_scenario(std::size_t n_species, double dup_rate, double loss_rate, std::uint64_t seed,
                                  int max_retries = 1000) {
  const SpeciesTree species = gen_species_tree(n_species, derive_seed(seed, 0, 0));
  return evolve_gene_tree(species, dup_rate, loss_rate, seed, max_retries);
}

/// A gene tree whose informative species triples are exactly `triples`:
/// one speciation-labeled copy of each triple on fresh genes, all hanging
/// from a duplication root. A single triple is included twice so the root
/// has two children; the empty set yields three genes of one species.
inline GeneTree realize_triple_set(const TripleSet& triples) {
  TreeBuilder builder;
  std::vector<Event> events;
  std::vector<std::string> species;
  std::vector<TreeBuilder::NodeId> roots;
  auto leaf = [&](std::string gene, const std::string& sp) {
    events.push_back(Event::kExtant);
    species.push_back(sp);
    return builder.add_leaf(std::move(gene));
  };
  auto interior = [&](std::vector<TreeBuilder::NodeId> kids, Event e) {
    events.push_back(e);
    species.emplace_back();
    return builder.add_interior(std::move(kids), std::nullopt);
  };
  if (triples.empty()) {
    for (int i = 1; i <= 3; ++i) roots.push_back(leaf("e" + std::to_string(i), "none"));
  } else {
    const int copies = triples.size() == 1 ? 2 : 1;
    std::size_t k = 0;
    for (int copy = 0; copy < copies; ++copy) {
      for (const auto& t : triples) {
        const std::string prefix = "r" + std::to_string(++k) + "_";
        const auto a = leaf(prefix + "1", t.a());
        const auto b = leaf(prefix + "2", t.b());
        const auto cherry = interior({a, b}, Event::kSpeciation);
        const auto c = leaf(prefix + "3", t.outgroup());
        roots.push_back(interior({cherry, c}, Event::kSpeciation));
      }
    }
  }
  const auto root = interior(roots, Event::kDuplication);
  return GeneTree::from_builder(builder, root, events, species);
}

}  // namespace triplerec
