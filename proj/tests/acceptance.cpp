// Acceptance runner: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria, not counting those named by --known-failing.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "support/oracles.hpp"
#include "triplerec/triplerec.hpp"

using namespace triplerec;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances.
constexpr std::size_t kC1MaxExhaustiveLeaves = 5;
constexpr int kC1RandomTrees = 20000;
constexpr int kC2Scenarios = 1000;
constexpr int kC3PairScenarios = 100;
constexpr int kC4Sets = 500;
constexpr std::size_t kC5Replicates = 150;
constexpr std::uint64_t kC5Seeds[] = {1, 2, 3};
constexpr double kC5HighLossThreshold = 0.75;
constexpr double kC5HighLossMin = 0.50;
constexpr double kC5LowLossMin = 0.90;
constexpr int kC5SeedsRequired = 2;
constexpr double kC6ContractionMin = 0.95;
constexpr int kC7Sets = 10000;
constexpr int kC7MinimalitySets = 2000;
constexpr std::size_t kC8Species = 100;
constexpr std::size_t kC8Sizes[] = {1000, 10000, 100000};
constexpr double kC8MaxRatio = 2.0;
constexpr std::size_t kC9MinRoundTrip = 200;
constexpr std::size_t kC9MinNegative = 30;

int failures = 0;
int known_failures = 0;
std::set<int> known_failing;

void report(int id, bool pass, const std::string& detail, Clock::time_point start) {
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const bool known = known_failing.contains(id);
  std::printf("criterion %d: %s  %s  [%.1fs]%s\n", id, pass ? "PASS" : "FAIL", detail.c_str(), secs,
              !pass && known ? "  (known failure)" : "");
  std::fflush(stdout);
  if (!pass) ++(known ? known_failures : failures);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<std::string> universe_of(const GeneTree& g) {
  return {g.species_names().begin(), g.species_names().end()};
}

// Gene-tree Newick for hierarchy h: interior cluster i (in h.clusters order,
// non-singletons only) is a duplication iff bit i of `dups` is set.
std::string labelled_newick(const oracle::Hierarchy& h, unsigned dups, const std::vector<int>& species) {
  std::map<oracle::Mask, int> interior;
  for (const auto m : h.clusters) {
    if (std::popcount(m) > 1) interior.emplace(m, static_cast<int>(interior.size()));
  }
  std::function<std::string(oracle::Mask)> write = [&](oracle::Mask m) -> std::string {
    if (std::popcount(m) == 1) {
      const int i = std::countr_zero(m);
      return "g" + std::to_string(i) + "@" + std::string(1, static_cast<char>('A' + species[i]));
    }
    std::string s = "(";
    bool first = true;
    for (const auto d : h.clusters) {
      if (d == m || (d & m) != d) continue;
      const bool maximal = std::none_of(h.clusters.begin(), h.clusters.end(), [&](oracle::Mask e) {
        return e != m && e != d && (e & m) == e && (e & d) == d;
      });
      if (!maximal) continue;
      s += (first ? "" : ",") + write(d);
      first = false;
    }
    return s + ")" + ((dups >> interior.at(m)) & 1u ? "D" : "S");
  };
  return write(oracle::full_mask(h.n)) + ";";
}

// Species assignments up to renaming, at most `blocks` species.
void restricted_growth(int n, int blocks, std::vector<int>& cur, const std::function<void()>& fn) {
  if (static_cast<int>(cur.size()) == n) {
    fn();
    return;
  }
  const int used = cur.empty() ? 0 : *std::max_element(cur.begin(), cur.end()) + 1;
  for (int s = 0; s <= std::min(used, blocks - 1); ++s) {
    cur.push_back(s);
    restricted_growth(n, blocks, cur, fn);
    cur.pop_back();
  }
}

struct Tally {
  std::size_t checked = 0;
  std::size_t mismatches = 0;
  std::size_t consistent = 0;
  std::string first;

  void check(const GeneTree& g) {
    if (!oracle::condition_c(g)) return;
    const bool fast = is_consistent(extract_species_triples(g), universe_of(g));
    const bool slow = oracle::brute_reconcilable(g);
    ++checked;
    consistent += fast;
    if (fast != slow) {
      if (mismatches++ == 0) first = to_newick(g);
    }
  }
};

void criterion1() {
  const auto start = Clock::now();
  Tally tally;
  for (int n = 3; n <= static_cast<int>(kC1MaxExhaustiveLeaves); ++n) {
    for (const auto& h : oracle::all_rooted_trees(n)) {
      int interior = 0;
      for (const auto m : h.clusters) interior += std::popcount(m) > 1;
      std::vector<int> cur;
      restricted_growth(n, 4, cur, [&] {
        for (unsigned dups = 0; dups < (1u << interior); ++dups) tally.check(parse_gene_tree(labelled_newick(h, dups, cur)));
      });
    }
  }
  const std::size_t exhaustive = tally.checked;
  std::mt19937_64 rng(7);
  for (int i = 0; i < kC1RandomTrees; ++i) {
    const int leaves = 6 + i % 2;
    tally.check(oracle::random_gene_tree(rng, leaves, 2 + i % 3, 0.2 + 0.1 * (i % 5)));
  }
  // Realizations of every set of one or two triples on four species.
  std::vector<Triple> pool;
  for (const char* a : {"A", "B", "C", "D"})
    for (const char* b : {"A", "B", "C", "D"})
      for (const char* c : {"A", "B", "C", "D"})
        if (std::string(a) < b && std::string(a) != c && std::string(b) != c) pool.emplace_back(a, b, c);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    tally.check(realize_triple_set({pool[i]}));
    for (std::size_t j = i + 1; j < pool.size(); ++j) tally.check(realize_triple_set({pool[i], pool[j]}));
  }
  report(1, tally.mismatches == 0 && tally.checked > 0,
         fmt("%zu gene trees satisfying (C) (%zu exhaustive, |L|<=7, |B|<=4), %zu consistent, %zu disagreements%s",
             tally.checked, exhaustive, tally.consistent, tally.mismatches,
             tally.mismatches ? (" e.g. " + tally.first).c_str() : ""),
         start);
}

struct Drawn {
  Scenario sc;
  std::uint64_t seed;
};

std::vector<Drawn> draw_scenarios(int count, std::uint64_t master) {
  std::vector<Drawn> out;
  for (std::uint64_t i = 0; static_cast<int>(out.size()) < count; ++i) {
    Rng rng(derive_seed(master, i, 0));
    const std::size_t n = std::uniform_int_distribution<std::size_t>(10, 100)(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double rd = unit(rng), rl = unit(rng);
    try {
      out.push_back({simulate_scenario(n, rd, rl, derive_seed(master, i, 1)), i});
    } catch (const SimulationError&) {
    }
  }
  return out;
}

Image image_lca_by_walk(const Tree& s, Image p, Image q) {
  const VertexId w = s.lca_by_walk(p.vertex, q.vertex);
  if ((p.is_edge() && p.vertex == w) || (q.is_edge() && q.vertex == w)) return Image::above(w);
  return Image::at(w);
}

void criteria2and3(const std::vector<Drawn>& scenarios, Clock::time_point start) {
  std::size_t map_failures = 0, undisplayed = 0, pair_failures = 0, pairs = 0, triples = 0;
  std::string first;
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    const auto& sc = scenarios[k].sc;
    ReconciliationMap mu;
    try {
      mu = construct_mu(sc.observable, sc.species);
    } catch (const Error& e) {
      if (map_failures++ == 0) first = e.what();
      continue;
    }
    if (!validate_mu(sc.observable, sc.species, mu).empty() && map_failures++ == 0) {
      first = "violations in scenario " + std::to_string(scenarios[k].seed);
    }
    const auto& s = sc.species.tree();
    for (const auto& t : extract_species_triples(sc.observable)) {
      ++triples;
      const VertexId a = s.leaf(t.a()), b = s.leaf(t.b()), c = s.leaf(t.outgroup());
      const VertexId ab = s.lca_by_walk(a, b);
      undisplayed += !(s.is_strictly_below(ab, s.lca_by_walk(ab, c)));
    }
    if (k >= static_cast<std::size_t>(kC3PairScenarios)) continue;
    const Tree& g = sc.observable.tree();
    for (VertexId x = 0; x < static_cast<VertexId>(g.size()); ++x) {
      for (VertexId y = x; y < static_cast<VertexId>(g.size()); ++y) {
        ++pairs;
        pair_failures += !precedes_or_equal(s, image_lca_by_walk(s, mu[x], mu[y]), mu[g.lca_by_walk(x, y)]);
      }
    }
  }
  report(2, map_failures == 0,
         fmt("%zu scenarios, %zu with a missing or invalid map%s", scenarios.size(), map_failures,
             first.empty() ? "" : (" (" + first + ")").c_str()),
         start);
  report(3, undisplayed == 0 && pair_failures == 0,
         fmt("%zu triples, %zu not displayed; %zu vertex pairs in %d scenarios, %zu order violations", triples,
             undisplayed, pairs, kC3PairScenarios, pair_failures),
         start);
}

void criterion4() {
  const auto start = Clock::now();
  std::mt19937_64 rng(11);
  std::size_t bad = 0, inconsistent = 0, total_triples = 0;
  for (int i = 0; i < kC4Sets; ++i) {
    const std::size_t n = 3 + static_cast<std::size_t>(i) % 4;
    std::vector<Triple> pool;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c)
          if (c != a && c != b) pool.emplace_back(species_label(a), species_label(b), species_label(c));
    const double p = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    TripleSet x;
    for (const auto& t : pool)
      if (std::bernoulli_distribution(p)(rng)) x.insert(t);
    total_triples += x.size();
    inconsistent += !x.empty() && !is_consistent(x);
    bad += extract_species_triples(realize_triple_set(x)) != x;
  }
  report(4, bad == 0,
         fmt("%d sets (%zu triples, %zu inconsistent), %zu round-trip mismatches", kC4Sets, total_triples, inconsistent,
             bad),
         start);
}

void criteria5and6() {
  const auto start = Clock::now();
  int seeds_passing = 0;
  std::size_t replicates = 0, contractions = 0;
  std::string detail;
  for (const auto seed : kC5Seeds) {
    ExperimentConfig config;
    config.replicates = kC5Replicates;
    config.min_species = 10;
    config.max_species = 100;
    config.seed = seed;
    config.threads = std::max(1u, std::thread::hardware_concurrency());
    const auto rows = run_experiment(config);
    double high_sum = 0, low_sum = 0;
    std::size_t high = 0, low = 0;
    for (const auto& r : rows) {
      if (r.loss_rate >= kC5HighLossThreshold) {
        high_sum += r.split_recovery;
        ++high;
      }
      if (r.loss_rate <= r.dup_rate) {
        low_sum += r.split_recovery;
        ++low;
      }
      ++replicates;
      contractions += r.contraction.is_contraction;
    }
    const double high_mean = high ? high_sum / static_cast<double>(high) : 0.0;
    const double low_mean = low ? low_sum / static_cast<double>(low) : 0.0;
    const bool pass = high_mean >= kC5HighLossMin && low_mean >= kC5LowLossMin;
    seeds_passing += pass;
    detail += fmt("%sseed %llu: high-loss %.3f (n=%zu), r_l<=r_d %.3f (n=%zu)", detail.empty() ? "" : "; ",
                  static_cast<unsigned long long>(seed), high_mean, high, low_mean, low);
  }
  report(5, seeds_passing >= kC5SeedsRequired,
         fmt("%d/%zu seeds pass (need %d; thresholds %.2f, %.2f): ", seeds_passing, std::size(kC5Seeds),
             kC5SeedsRequired, kC5HighLossMin, kC5LowLossMin) +
             detail,
         start);
  const double rate = static_cast<double>(contractions) / static_cast<double>(replicates);
  report(6, rate >= kC6ContractionMin,
         fmt("%zu/%zu replicates are contractions (%.1f%%, need %.0f%%)", contractions, replicates, 100.0 * rate,
             100.0 * kC6ContractionMin),
         start);
}

std::vector<std::array<int, 3>> as_indices(const TripleSet& x, const std::vector<std::string>& names) {
  std::vector<std::array<int, 3>> out;
  auto idx = [&](const std::string& s) {
    return static_cast<int>(std::lower_bound(names.begin(), names.end(), s) - names.begin());
  };
  for (const auto& t : x) out.push_back({idx(t.a()), idx(t.b()), idx(t.outgroup())});
  return out;
}

void criterion7() {
  const auto start = Clock::now();
  std::mt19937_64 rng(13);
  std::size_t verdict_mismatch = 0, not_displayed = 0, not_minimal = 0, consistent = 0, minimality_checked = 0;
  auto one = [&](std::size_t n, bool compare) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < n; ++j) names.push_back(species_label(j));
    std::vector<Triple> pool;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c)
          if (c != a && c != b) pool.emplace_back(names[a], names[b], names[c]);
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, 2 * n)(rng);
    const TripleSet x(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(k, pool.size())));
    const auto built = build_species_tree(x, names);
    if (compare) verdict_mismatch += built.consistent() != oracle::brute_consistent(x, names);
    if (!built.consistent()) return;
    ++consistent;
    const auto& tree = built.tree->plain();
    for (const auto& t : x) not_displayed += !displays(tree, t);
    ++minimality_checked;
    not_minimal += !oracle::brute_minor_minimal(oracle::from_tree(tree, names), as_indices(x, names));
  };
  for (int i = 0; i < kC7Sets; ++i) one(3 + static_cast<std::size_t>(i) % 3, true);
  for (int i = 0; i < kC7MinimalitySets; ++i) one(6, false);
  report(7, verdict_mismatch == 0 && not_displayed == 0 && not_minimal == 0,
         fmt("%d sets on <=5 species, %zu verdict mismatches; %zu trees built, %zu undisplayed inputs, "
             "%zu/%zu not minor-minimal (<=6 species)",
             kC7Sets, verdict_mismatch, consistent, not_displayed, not_minimal, minimality_checked),
         start);
}

void criterion8() {
  const auto start = Clock::now();
  const auto species = gen_species_tree(kC8Species, 17);
  std::mt19937_64 rng(19);
  std::vector<double> per_leaf;
  std::string detail;
  for (const auto size : kC8Sizes) {
    const auto gene = oracle::grow_gene_tree(species, size, rng);
    const std::size_t reps = std::max<std::size_t>(1, 200000 / size);
    std::vector<double> samples;
    for (int s = 0; s < 7; ++s) {
      const auto t0 = Clock::now();
      std::size_t sink = 0;
      for (std::size_t r = 0; r < reps; ++r) sink += construct_mu(gene, species).images.size();
      const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
      if (sink == 0) std::puts("");
      samples.push_back(secs / static_cast<double>(reps));
    }
    std::nth_element(samples.begin(), samples.begin() + 3, samples.end());
    per_leaf.push_back(samples[3] / static_cast<double>(size));
    detail += fmt("%s|L|=%zu: %.3g s", detail.empty() ? "" : ", ", gene.tree().leaf_count(), samples[3]);
  }
  const double ratio = *std::max_element(per_leaf.begin(), per_leaf.end()) /
                       *std::min_element(per_leaf.begin(), per_leaf.end());
  report(8, ratio <= kC8MaxRatio, detail + fmt("; per-leaf max/min %.2f (limit %.1f)", ratio, kC8MaxRatio), start);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string reserialize(const std::string& kind, const std::string& text) {
  if (kind == "gene") return to_newick(parse_gene_tree(text)) + "\n";
  if (kind == "species") return to_newick(parse_species_tree(text)) + "\n";
  return to_tsv(parse_triples_tsv(text));
}

void criterion9() {
  const auto start = Clock::now();
  const fs::path root(TRIPLEREC_TEST_DATA);
  std::size_t round = 0, diffs = 0, negative = 0, rejected = 0;
  auto kind_of = [](const fs::path& p) {
    const auto name = p.filename().string();
    return name.substr(0, name.find('_'));
  };
  for (const auto& e : fs::directory_iterator(root / "roundtrip")) {
    ++round;
    const auto text = slurp(e.path());
    try {
      diffs += reserialize(kind_of(e.path()), text) != text;
    } catch (const Error&) {
      ++diffs;
    }
  }
  for (const auto& e : fs::directory_iterator(root / "negative")) {
    ++negative;
    try {
      reserialize(kind_of(e.path()), slurp(e.path()));
    } catch (const ParseError& err) {
      rejected += std::string(err.what()).find(" at ") != std::string::npos;
    } catch (const Error&) {
    }
  }
  report(9, round >= kC9MinRoundTrip && diffs == 0 && negative >= kC9MinNegative && rejected == negative,
         fmt("%zu round-trip files, %zu diffs; %zu malformed files, %zu rejected with a position", round, diffs,
             negative, rejected),
         start);
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-failing" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string item; std::getline(list, item, ',');) known_failing.insert(std::stoi(item));
    } else {
      std::fprintf(stderr, "usage: acceptance [--known-failing N[,N...]]\n");
      return 64;
    }
  }
  criterion1();
  const auto start = Clock::now();
  const auto scenarios = draw_scenarios(kC2Scenarios, 2024);
  criteria2and3(scenarios, start);
  criterion4();
  criteria5and6();
  criterion7();
  criterion8();
  criterion9();
  std::printf("%d criteria failed, %d known failures\n", failures, known_failures);
  return failures;
}
