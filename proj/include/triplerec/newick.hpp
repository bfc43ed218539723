#pragma once

#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "triplerec/error.hpp"
#include "triplerec/gene_tree.hpp"
#include "triplerec/tree.hpp"

namespace triplerec {

/// gene id -> species, as read from a sidecar TSV.
using SpeciesMap = std::map<std::string, std::string, std::less<>>;

namespace newick {

struct RawNode {
  std::string label;
  std::size_t label_position = 0;
  std::optional<double> length;
  std::vector<std::size_t> children;
  std::size_t position = 0;  // '(' for interior nodes, first label byte for leaves
};

/// Syntax-level Newick parse. Nodes are stored children first; the last node
/// is the root.
struct RawTree {
  std::vector<RawNode> nodes;
  std::size_t end_position = 0;  // offset of the terminating ';'
};

inline bool is_name_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.' ||
         c == '-';
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  RawTree parse() {
    RawTree out;
    struct Frame {
      std::size_t open;
      std::vector<std::size_t> children;
    };
    std::vector<Frame> open;
    skip_ws();
    for (;;) {
      // Expecting the start of a subtree.
      skip_ws();
      if (peek() == '(') {
        open.push_back({pos_, {}});
        ++pos_;
        continue;
      }
      RawNode leaf;
      leaf.position = pos_;
      leaf.label_position = pos_;
      leaf.label = read_label();
      if (leaf.label.empty()) fail("expected a label or '('");
      leaf.length = read_length();
      out.nodes.push_back(std::move(leaf));
      std::size_t current = out.nodes.size() - 1;

      // After a complete subtree: ',', ')' or the end of the statement.
      for (;;) {
        skip_ws();
        if (open.empty()) {
          if (peek() != ';') fail(at_end() ? "missing ';'" : "expected ';'");
          out.end_position = pos_;
          ++pos_;
          skip_ws();
          if (!at_end()) fail("trailing characters after ';'");
          return out;
        }
        const char c = peek();
        if (c == ',') {
          open.back().children.push_back(current);
          ++pos_;
          break;
        }
        if (c != ')') fail(at_end() ? "unbalanced parentheses" : "expected ',' or ')'");
        open.back().children.push_back(current);
        RawNode node;
        node.position = open.back().open;
        node.children = std::move(open.back().children);
        open.pop_back();
        ++pos_;
        skip_ws();
        node.label_position = pos_;
        node.label = read_label();
        node.length = read_length();
        out.nodes.push_back(std::move(node));
        current = out.nodes.size() - 1;
      }
    }
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void skip_ws() {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  std::string read_label() {
    const std::size_t start = pos_;
    while (!at_end() && (is_name_char(text_[pos_]) || text_[pos_] == '@')) ++pos_;
    if (!at_end() && text_[pos_] != ':' && text_[pos_] != ',' && text_[pos_] != ')' && text_[pos_] != ';' &&
        text_[pos_] != '(' && text_[pos_] != ' ' && text_[pos_] != '\t' && text_[pos_] != '\n' &&
        text_[pos_] != '\r') {
      fail(std::string("invalid character '") + text_[pos_] + "'");
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::optional<double> read_length() {
    skip_ws();
    if (peek() != ':') return std::nullopt;
    ++pos_;
    skip_ws();
    const std::size_t start = pos_;
    while (!at_end() && ((text_[pos_] >= '0' && text_[pos_] <= '9') || text_[pos_] == '.' || text_[pos_] == 'e' ||
                         text_[pos_] == 'E' || text_[pos_] == '+' || text_[pos_] == '-')) {
      ++pos_;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (start == pos_ || ec != std::errc() || ptr != text_.data() + pos_ || !std::isfinite(value)) {
      throw ParseError(start, "malformed branch length");
    }
    if (value < 0.0) throw ParseError(start, "negative branch length");
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline std::string format_length(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (const char c : s) {
    if (!is_name_char(c)) return false;
  }
  return true;
}

// Emits the subtree of `from` with an iterative walk; `emit_leaf` and
// `emit_interior_suffix` append vertex-specific text.
template <class LeafFn, class InteriorFn>
void write_subtree(const Tree& t, VertexId from, std::string& out, LeafFn emit_leaf, InteriorFn emit_after) {
  struct Item {
    VertexId v;
    std::size_t next_child;
  };
  std::vector<Item> stack{{from, 0}};
  while (!stack.empty()) {
    Item& top = stack.back();
    const VertexId v = top.v;
    if (t.is_leaf(v)) {
      emit_leaf(v, out);
      stack.pop_back();
      continue;
    }
    const auto kids = t.children(v);
    if (top.next_child == 0) out += '(';
    if (top.next_child < kids.size()) {
      if (top.next_child > 0) out += ',';
      const VertexId c = kids[top.next_child++];
      stack.push_back({c, 0});
      continue;
    }
    out += ')';
    emit_after(v, out);
    stack.pop_back();
  }
}

}  // namespace newick

/// Parses `geneId@speciesId` leaves and `S`/`D` interior labels. Branch
/// lengths are accepted and ignored. With a sidecar map, leaves may omit the
/// `@species` suffix.
inline GeneTree parse_gene_tree(std::string_view text, const SpeciesMap* sidecar = nullptr) {
  const newick::RawTree raw = newick::Parser(text).parse();
  TreeBuilder builder;
  std::vector<Event> events;
  std::vector<std::string> species;
  std::vector<TreeBuilder::NodeId> node_of(raw.nodes.size());
  std::map<std::string, std::size_t, std::less<>> seen;
  std::size_t leaves = 0;
  for (std::size_t i = 0; i < raw.nodes.size(); ++i) {
    const newick::RawNode& n = raw.nodes[i];
    if (n.children.empty()) {
      std::string gene = n.label;
      std::string sp;
      if (const auto at = n.label.find('@'); at != std::string::npos) {
        gene = n.label.substr(0, at);
        sp = n.label.substr(at + 1);
        if (!newick::valid_name(gene)) throw ParseError(n.label_position, "invalid gene id in '" + n.label + "'");
        if (!newick::valid_name(sp)) throw ParseError(n.label_position + at + 1, "invalid species in '" + n.label + "'");
      } else {
        if (!newick::valid_name(gene)) throw ParseError(n.label_position, "invalid gene id '" + n.label + "'");
        const auto it = sidecar ? sidecar->find(gene) : SpeciesMap::const_iterator{};
        if (sidecar == nullptr || it == sidecar->end()) {
          throw ParseError(n.label_position, "leaf '" + n.label + "' has no '@species' suffix");
        }
        sp = it->second;
      }
      if (!seen.emplace(gene, n.label_position).second) {
        throw ParseError(n.label_position, "duplicate gene id '" + gene + "'");
      }
      ++leaves;
      node_of[i] = builder.add_leaf(gene);
      events.push_back(Event::kExtant);
      species.push_back(std::move(sp));
      continue;
    }
    if (n.children.size() == 1) throw ParseError(n.position, "vertex with a single child");
    Event e;
    if (n.label == "S") {
      e = Event::kSpeciation;
    } else if (n.label == "D") {
      e = Event::kDuplication;
    } else if (n.label.empty()) {
      throw ParseError(n.label_position, "missing event label on interior node opened at " +
                                             std::to_string(n.position));
    } else {
      throw ParseError(n.label_position, "unknown event label '" + n.label + "'");
    }
    std::vector<TreeBuilder::NodeId> kids;
    for (const auto c : n.children) kids.push_back(node_of[c]);
    node_of[i] = builder.add_interior(std::move(kids));
    events.push_back(e);
    species.emplace_back();
  }
  if (leaves < 3) throw ParseError(raw.end_position, "gene tree needs at least 3 leaves");
  return GeneTree::from_builder(builder, node_of.back(), events, species);
}

/// Plain Newick with optional lengths; the result carries ρ_S.
inline SpeciesTree parse_species_tree(std::string_view text) {
  const newick::RawTree raw = newick::Parser(text).parse();
  TreeBuilder builder;
  std::vector<TreeBuilder::NodeId> node_of(raw.nodes.size());
  std::map<std::string, std::size_t, std::less<>> seen;
  for (std::size_t i = 0; i < raw.nodes.size(); ++i) {
    const newick::RawNode& n = raw.nodes[i];
    if (n.children.empty()) {
      if (!newick::valid_name(n.label)) throw ParseError(n.label_position, "invalid species label '" + n.label + "'");
      if (!seen.emplace(n.label, n.label_position).second) {
        throw ParseError(n.label_position, "duplicate species label '" + n.label + "'");
      }
      node_of[i] = builder.add_leaf(n.label, n.length);
      continue;
    }
    if (!n.label.empty()) throw ParseError(n.label_position, "unexpected interior label '" + n.label + "'");
    if (n.children.size() == 1) throw ParseError(n.position, "vertex with a single child");
    std::vector<TreeBuilder::NodeId> kids;
    for (const auto c : n.children) kids.push_back(node_of[c]);
    node_of[i] = builder.add_interior(std::move(kids), n.length);
  }
  return SpeciesTree(std::move(builder), node_of.back());
}

/// Canonical gene-tree Newick: `gene@species` leaves, `S`/`D` interior labels.
inline std::string to_newick(const GeneTree& gene) {
  std::string out;
  newick::write_subtree(
      gene.tree(), gene.tree().root(), out,
      [&](VertexId v, std::string& s) {
        s += gene.tree().label(v);
        s += '@';
        s += gene.species_name(v);
      },
      [&](VertexId v, std::string& s) { s += event_code(gene.event(v)); });
  out += ';';
  return out;
}

/// Canonical Newick for a plain tree (leaf labels and any lengths).
inline std::string to_newick(const Tree& tree, VertexId from = 0) {
  std::string out;
  auto len = [&](VertexId v, std::string& s) {
    if (const auto l = tree.length(v)) {
      s += ':';
      s += newick::format_length(*l);
    }
  };
  newick::write_subtree(
      tree, from, out,
      [&](VertexId v, std::string& s) {
        s += tree.label(v);
        len(v, s);
      },
      len);
  out += ';';
  return out;
}

/// Species Newick without ρ_S; the length of the synthetic edge, if known,
/// is written on the outermost vertex.
inline std::string to_newick(const SpeciesTree& species) { return to_newick(species.tree(), species.top()); }

/// Topology-only canonical form, used to compare trees up to equivalence.
inline std::string canonical_topology(const Tree& tree, VertexId from = 0) {
  std::string out;
  newick::write_subtree(
      tree, from, out, [&](VertexId v, std::string& s) { s += tree.label(v); }, [](VertexId, std::string&) {});
  out += ';';
  return out;
}

/// Two-column `gene<TAB>species` sidecar. Blank lines and `#` comments are
/// skipped.
inline SpeciesMap parse_species_map(std::string_view text) {
  SpeciesMap out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(line_no, "expected two tab-separated columns", "line");
    }
    std::string gene = line.substr(0, tab);
    std::string sp = line.substr(tab + 1);
    if (!newick::valid_name(gene) || !newick::valid_name(sp)) throw ParseError(line_no, "invalid name", "line");
    if (!out.emplace(std::move(gene), std::move(sp)).second) {
      throw ParseError(line_no, "duplicate gene id", "line");
    }
  }
  return out;
}

}  // namespace triplerec
