#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "triplerec/triplerec.hpp"

namespace triplerec::cli {

// Domain verdict: inconsistent triples, missing map, failed validation.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitVerdict = 2;
inline constexpr int kExitInternal = 3;

using nlohmann::json;

inline std::string read_file(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), {}};
}

// Writes to `path`, or to `fallback` when the path is empty or "-".
inline void write_output(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty() || path == "-") {
    fallback << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

inline json triples_json(const TripleSet& triples) {
  json arr = json::array();
  for (const auto& t : triples) arr.push_back({t.a(), t.b(), t.outgroup()});
  return arr;
}

inline json map_json(const ReconciliationMap& mu, const SpeciesTree& species) {
  json arr = json::array();
  for (std::size_t x = 0; x < mu.images.size(); ++x) {
    const Image img = mu.images[x];
    json row{{"gene_vertex", x}, {"kind", img.is_edge() ? "E" : "V"}};
    if (img.is_edge()) {
      row["image"] = std::to_string(species.tree().parent(img.vertex)) + "/" + std::to_string(img.vertex);
    } else {
      row["image"] = std::to_string(img.vertex);
    }
    arr.push_back(row);
  }
  return arr;
}

inline json row_json(const ExperimentRow& r) {
  json j{{"seed", r.seed},         {"n_species", r.n_species}, {"dup_rate", r.dup_rate},
         {"loss_rate", r.loss_rate}, {"n_dups", r.n_dups},     {"n_losses", r.n_losses},
         {"split_recovery", r.split_recovery}};
  j["deficit"] = r.contraction.deficit ? json(*r.contraction.deficit) : json(nullptr);
  return j;
}

struct Common {
  std::string format = "tsv";
  bool force = false;
  std::string species_map;
};

inline GeneTree load_gene(const std::string& path, const Common& common) {
  std::optional<SpeciesMap> sidecar;
  if (!common.species_map.empty()) sidecar = parse_species_map(read_file(common.species_map));
  return parse_gene_tree(read_file(path), sidecar ? &*sidecar : nullptr);
}

// Under --force a (C)-violating gene tree is processed anyway and its
// output is prefixed with a marker comment.
inline std::string unreliable_marker(const GeneTree& gene, const Common& common, std::ostream& err) {
  if (!common.force) return {};
  const auto violations = validate_condition_c(gene);
  if (violations.empty()) return {};
  err << "warning: condition (C) violated at " << violations.size() << " vertex pair(s); output is unreliable\n";
  return "# unreliable: condition (C) violated\n";
}

inline std::string triple_lines(const TripleSet& triples) { return to_tsv(triples); }

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Species trees from event-labeled gene trees via informative triples", "triplerec"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "triplerec 1.0.0");

  Common common;
  auto add_common = [&](CLI::App* sub, bool with_gene_options) {
    sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"tsv", "json"}));
    if (with_gene_options) {
      sub->add_flag("--force", common.force, "Process gene trees that violate condition (C)");
      sub->add_option("--species-map", common.species_map, "TSV mapping bare gene ids to species");
    }
  };

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Simulate a species tree and a gene family");
  std::size_t n_species = 10;
  double dup_rate = 0.0;
  double loss_rate = 0.0;
  std::uint64_t seed = 0;
  int max_retries = 1000;
  std::string out_species, out_gene, out_true;
  simulate->add_option("--species", n_species, "Number of species")->required()->check(CLI::Range(2, 100000));
  simulate->add_option("--dup-rate", dup_rate, "Duplication rate")->required()->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--loss-rate", loss_rate, "Loss rate")->required()->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--seed", seed, "Seed")->envname("TRIPLEREC_SEED");
  simulate->add_option("--max-retries", max_retries, "Rejection attempts")->check(CLI::PositiveNumber);
  simulate->add_option("--out-species", out_species, "Species tree Newick");
  simulate->add_option("--out-gene", out_gene, "Observable gene tree Newick");
  simulate->add_option("--out-true", out_true, "True gene tree with losses (debug format)");
  add_common(simulate, false);

  // triples
  auto* triples = app.add_subcommand("triples", "Extract informative species triples");
  std::string gene_path, out_path;
  bool genes_level = false;
  triples->add_option("--gene", gene_path, "Gene tree Newick")->required();
  triples->add_option("--out", out_path, "Output file");
  triples->add_flag("--genes-level", genes_level, "Also list the gene-level triples");
  add_common(triples, true);

  // infer
  auto* infer = app.add_subcommand("infer", "Infer a species tree with BUILD");
  std::string triples_path;
  auto* infer_gene = infer->add_option("--gene", gene_path, "Gene tree Newick");
  auto* infer_triples = infer->add_option("--triples", triples_path, "Species triple TSV");
  infer_gene->excludes(infer_triples);
  infer->add_option("--out", out_path, "Output file");
  add_common(infer, true);

  // reconcile
  auto* reconcile = app.add_subcommand("reconcile", "Construct a reconciliation map");
  std::string species_path;
  std::size_t enumerate = 0;
  reconcile->add_option("--gene", gene_path, "Gene tree Newick")->required();
  reconcile->add_option("--species", species_path, "Species tree Newick")->required();
  reconcile->add_option("--out", out_path, "Output file");
  reconcile->add_option("--enumerate", enumerate, "List up to K maps over duplication placements");
  add_common(reconcile, true);

  // validate
  auto* validate = app.add_subcommand("validate", "Check condition (C) and, optionally, a map");
  std::string map_path;
  validate->add_option("--gene", gene_path, "Gene tree Newick")->required();
  auto* validate_species = validate->add_option("--species", species_path, "Species tree Newick");
  auto* validate_map = validate->add_option("--map", map_path, "Map TSV");
  validate_species->needs(validate_map);
  validate_map->needs(validate_species);
  add_common(validate, true);

  // realize
  auto* realize = app.add_subcommand("realize", "Gene tree whose informative triples are a given set");
  realize->add_option("--triples", triples_path, "Species triple TSV")->required();
  realize->add_option("--out", out_path, "Output file");
  add_common(realize, false);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Simulate, infer and score many replicates");
  ExperimentConfig config;
  std::string summary_path;
  experiment->add_option("--replicates", config.replicates, "Replicate count")->required();
  experiment->add_option("--min-species", config.min_species, "Smallest species count")->check(CLI::Range(3, 100000));
  experiment->add_option("--max-species", config.max_species, "Largest species count")->check(CLI::Range(3, 100000));
  experiment->add_option("--seed", config.seed, "Master seed")->envname("TRIPLEREC_SEED");
  experiment->add_option("--threads", config.threads, "Worker threads")->check(CLI::PositiveNumber);
  experiment->add_option("--out", out_path, "Metric rows");
  experiment->add_option("--summary", summary_path, "Mean split recovery on a 10x10 rate grid");
  add_common(experiment, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInput;
  }

  const bool as_json = common.format == "json";
  try {
    if (*simulate) {
      const auto scenario = simulate_scenario(n_species, dup_rate, loss_rate, seed, max_retries);
      const std::string s_text = to_newick(scenario.species) + "\n";
      const std::string g_text = to_newick(scenario.observable) + "\n";
      if (!out_true.empty()) write_output(out_true, to_debug_newick(scenario.true_gene, scenario.species) + "\n", out);
      if (as_json) {
        json j{{"seed", seed},
               {"dup_rate", dup_rate},
               {"loss_rate", loss_rate},
               {"attempts", scenario.attempts},
               {"n_dups", scenario.duplications},
               {"n_losses", scenario.losses},
               {"species_tree", to_newick(scenario.species)},
               {"gene_tree", to_newick(scenario.observable)}};
        out << j.dump(2) << "\n";
      }
      if (!out_species.empty()) write_output(out_species, s_text, out);
      if (!out_gene.empty()) write_output(out_gene, g_text, out);
      if (!as_json && out_species.empty() && out_gene.empty()) out << s_text << g_text;
      return kExitOk;
    }

    if (*triples) {
      const auto gene = load_gene(gene_path, common);
      const ExtractOptions options{Enumeration::kVertexDriven, common.force};
      const auto marker = unreliable_marker(gene, common, err);
      const auto species_level = extract_species_triples(gene, options);
      std::optional<TripleSet> gene_level;
      if (genes_level) gene_level = extract_gene_triples(gene, options);
      std::string text;
      if (as_json) {
        json j{{"species_triples", triples_json(species_level)}};
        if (gene_level) j["gene_triples"] = triples_json(*gene_level);
        if (!marker.empty()) j["unreliable"] = true;
        text = j.dump(2) + "\n";
      } else {
        text = marker;
        if (gene_level) text += "# species triples\n";
        text += triple_lines(species_level);
        if (gene_level) text += "# gene triples\n" + triple_lines(*gene_level);
      }
      write_output(out_path, text, out);
      return kExitOk;
    }

    if (*infer) {
      if (gene_path.empty() == triples_path.empty()) throw UsageError("infer needs exactly one of --gene or --triples");
      TripleSet input;
      std::vector<std::string> universe;
      std::string marker;
      if (!gene_path.empty()) {
        const auto gene = load_gene(gene_path, common);
        marker = unreliable_marker(gene, common, err);
        input = extract_species_triples(gene, {Enumeration::kVertexDriven, common.force});
        universe.assign(gene.species_names().begin(), gene.species_names().end());
      } else {
        input = parse_triples_tsv(read_file(triples_path));
        const auto labels = labels_of(input);
        universe.assign(labels.begin(), labels.end());
        if (universe.empty()) throw InputError("triple file is empty");
      }
      const auto result = build_species_tree(input, universe);
      if (!result.consistent()) {
        if (as_json) {
          json j{{"consistent", false},
                 {"labels", result.conflict.labels},
                 {"triples", triples_json(result.conflict.triples)}};
          write_output(out_path, j.dump(2) + "\n", out);
        } else {
          std::string report = "# inconsistent: no tree on {";
          for (std::size_t i = 0; i < result.conflict.labels.size(); ++i) {
            report += (i ? "," : "") + result.conflict.labels[i];
          }
          report += "} displays these triples\n" + triple_lines(result.conflict.triples);
          write_output(out_path, report, out);
        }
        err << "error: the informative triples are inconsistent; no species tree exists\n";
        return kExitVerdict;
      }
      const auto newick = to_newick(*result.tree);
      if (as_json) {
        json j{{"consistent", true}, {"species_tree", newick}, {"triples", input.size()}};
        if (!marker.empty()) j["unreliable"] = true;
        write_output(out_path, j.dump(2) + "\n", out);
      } else {
        write_output(out_path, marker + newick + "\n", out);
      }
      return kExitOk;
    }

    if (*reconcile) {
      const auto gene = load_gene(gene_path, common);
      const auto species = parse_species_tree(read_file(species_path));
      const auto marker = unreliable_marker(gene, common, err);
      const ReconcileOptions options{common.force};
      try {
        std::vector<ReconciliationMap> maps;
        if (enumerate > 0) {
          maps = enumerate_duplication_placements(gene, species, enumerate, options);
        } else {
          maps.push_back(construct_mu(gene, species, options));
        }
        std::string text;
        if (as_json) {
          json arr = json::array();
          for (const auto& mu : maps) arr.push_back(map_json(mu, species));
          json j{{"maps", arr}};
          if (!marker.empty()) j["unreliable"] = true;
          text = j.dump(2) + "\n";
        } else {
          text = marker;
          for (std::size_t k = 0; k < maps.size(); ++k) {
            if (enumerate > 0) text += "# map " + std::to_string(k + 1) + "\n";
            text += to_tsv(maps[k], species);
          }
        }
        write_output(out_path, text, out);
        return kExitOk;
      } catch (const NoSpeciesTree& e) {
        if (as_json) {
          json j{{"reconcilable", false}, {"offending_triples", triples_json(e.offending())}};
          write_output(out_path, j.dump(2) + "\n", out);
        } else {
          write_output(out_path, "# not displayed by the species tree\n" + triple_lines(e.offending()), out);
        }
        err << "error: " << e.what() << "\n";
        return kExitVerdict;
      }
    }

    if (*validate) {
      const auto gene = load_gene(gene_path, common);
      const auto violations = validate_condition_c(gene);
      std::vector<MapViolation> map_violations;
      std::optional<SpeciesTree> species;
      if (!species_path.empty()) {
        species = parse_species_tree(read_file(species_path));
        const auto mu = parse_map_tsv(read_file(map_path), *species);
        map_violations = validate_mu(gene, *species, mu);
      }
      if (as_json) {
        json cond = json::array();
        for (const auto& v : violations) {
          cond.push_back({{"vertex", v.vertex},
                          {"first_child", v.first_child},
                          {"second_child", v.second_child},
                          {"shared_species", v.shared_species}});
        }
        json maps = json::array();
        for (const auto& v : map_violations) {
          maps.push_back({{"rule", v.rule}, {"gene_vertex", v.gene_vertex}, {"other", v.other}, {"detail", v.detail}});
        }
        json j{{"condition_c", cond}};
        if (species) j["map"] = maps;
        j["valid"] = violations.empty() && map_violations.empty();
        out << j.dump(2) << "\n";
      } else {
        for (const auto& v : violations) out << "condition-c\t" << describe(v) << "\n";
        for (const auto& v : map_violations) {
          out << v.rule << "\t" << v.gene_vertex << "\t" << (v.other == kNoVertex ? std::string("-") : std::to_string(v.other))
              << "\t" << v.detail << "\n";
        }
        if (violations.empty() && map_violations.empty()) out << "ok\n";
      }
      return violations.empty() && map_violations.empty() ? kExitOk : kExitVerdict;
    }

    if (*realize) {
      const auto gene = realize_triple_set(parse_triples_tsv(read_file(triples_path)));
      const auto text = to_newick(gene);
      if (as_json) {
        write_output(out_path, json{{"gene_tree", text}}.dump(2) + "\n", out);
      } else {
        write_output(out_path, text + "\n", out);
      }
      return kExitOk;
    }

    if (*experiment) {
      const auto rows = run_experiment(config, &err);
      std::string text;
      if (as_json) {
        json arr = json::array();
        for (const auto& r : rows) arr.push_back(row_json(r));
        text = arr.dump(2) + "\n";
      } else {
        text = std::string(kExperimentHeader) + "\n";
        for (const auto& r : rows) text += to_tsv_row(r) + "\n";
      }
      write_output(out_path, text, out);
      if (!summary_path.empty()) {
        const auto cells = binned_summary(rows, 10);
        std::string summary;
        if (as_json) {
          json arr = json::array();
          for (const auto& c : cells) {
            arr.push_back({{"dup_bin", c.dup_bin}, {"loss_bin", c.loss_bin}, {"count", c.count},
                           {"mean_split_recovery", c.mean_split_recovery}});
          }
          summary = json{{"bins", 10}, {"cells", arr}}.dump(2) + "\n";
        } else {
          std::ostringstream s;
          s << "# 10x10 grid over [0,1)^2; bin k covers rates [k/10, (k+1)/10)\n";
          s << "dup_bin\tloss_bin\tcount\tmean_split_recovery\n";
          for (const auto& c : cells) {
            s << c.dup_bin << '\t' << c.loss_bin << '\t' << c.count << '\t' << c.mean_split_recovery << '\n';
          }
          summary = s.str();
        }
        write_output(summary_path, summary, out);
      }
      return kExitOk;
    }
  } catch (const SimulationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitVerdict;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace triplerec::cli
