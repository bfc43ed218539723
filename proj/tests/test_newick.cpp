#include <gtest/gtest.h>

#include "triplerec/newick.hpp"

using namespace triplerec;

TEST(GeneNewick, ParsesSpeciationTree) {
  const auto g = parse_gene_tree("((a@A,b@B)S,c@C)S;");
  EXPECT_EQ(g.tree().leaf_count(), 3u);
  for (VertexId v : g.tree().interior_vertices()) EXPECT_TRUE(g.is_speciation(v));
  EXPECT_EQ(g.species_name(g.tree().leaf("a")), "A");
  EXPECT_EQ(g.species_count(), 3u);
}

TEST(GeneNewick, ParsesDuplicationRoot) {
  const auto g = parse_gene_tree("((a1@A,b1@B)S,(a2@A,b2@B)S)D;");
  EXPECT_TRUE(g.is_duplication(g.tree().root()));
  for (VertexId c : g.tree().children(g.tree().root())) EXPECT_TRUE(g.is_speciation(c));
}

TEST(GeneNewick, UnknownEventLabelNamesPosition) {
  try {
    parse_gene_tree("((a@A,b@B)X,c@C)S;");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 10u);
    EXPECT_NE(std::string(e.what()).find("'X'"), std::string::npos);
  }
}

TEST(GeneNewick, InputErrors) {
  EXPECT_THROW(parse_gene_tree("((a@A,a@B)S,c@C)S;"), InputError);
  EXPECT_THROW(parse_gene_tree("((a@A,b)S,c@C)S;"), ParseError);
  EXPECT_THROW(parse_gene_tree("(a@A,b@B)S;"), InputError);
  EXPECT_THROW(parse_gene_tree("((a@A,b@B),c@C)S;"), ParseError);
  EXPECT_THROW(parse_gene_tree("((a@A,b@B)S,c@C)S"), ParseError);
  EXPECT_THROW(parse_gene_tree("((a@A,b@B)S,c@C)S;x"), ParseError);
}

TEST(GeneNewick, LengthsAcceptedAndDropped) {
  const auto g = parse_gene_tree(" ( (a@A:0.5 , b@B:1e-3)S:2 ,c@C:7 ) S ;\n");
  EXPECT_EQ(to_newick(g), "((a@A,b@B)S,c@C)S;");
}

TEST(GeneNewick, SidecarSpeciesMap) {
  const auto map = parse_species_map("a\tA\nb\tB\nc\tC\n");
  const auto g = parse_gene_tree("((a,b)S,c)S;", &map);
  EXPECT_EQ(to_newick(g), "((a@A,b@B)S,c@C)S;");
  EXPECT_THROW(parse_gene_tree("((a,b)S,d)S;", &map), ParseError);
}

TEST(GeneNewick, CanonicalSerialization) {
  EXPECT_EQ(to_newick(parse_gene_tree("((b@B,a@A)S,c@C)S;")), "((a@A,b@B)S,c@C)S;");
  const std::string text = "((a@A,b@B)S,c@C)S;";
  EXPECT_EQ(to_newick(parse_gene_tree(text)), text);
}

TEST(SpeciesNewick, AugmentsWithSyntheticRoot) {
  const auto s = parse_species_tree("((A,B),C);");
  EXPECT_EQ(s.tree().size(), 6u);
  EXPECT_EQ(s.tree().outdegree(s.rho()), 1u);
  EXPECT_EQ(s.tree().parent(s.top()), s.rho());
  EXPECT_EQ(s.tree().lca_of(std::vector<VertexId>{s.leaf("A"), s.leaf("B"), s.leaf("C")}), s.top());
  EXPECT_EQ(to_newick(s), "((A,B),C);");
}

TEST(SpeciesNewick, Rejections) {
  EXPECT_THROW(parse_species_tree("(A);"), ParseError);
  EXPECT_THROW(parse_species_tree("((A,B),A);"), InputError);
  EXPECT_THROW(parse_species_tree("((A,B)X,C);"), ParseError);
  EXPECT_THROW(parse_species_tree("((A,B),C:-1);"), ParseError);
}

TEST(SpeciesNewick, LengthsRoundTrip) {
  const std::string text = "((A:0.25,B:0.25):0.75,C:1):0.5;";
  const auto s = parse_species_tree(text);
  EXPECT_EQ(to_newick(s), text);
  EXPECT_EQ(s.tree().length(s.top()), 0.5);
}

TEST(SpeciesNewick, SingleSpecies) {
  const auto s = parse_species_tree("A;");
  EXPECT_EQ(s.species_count(), 1u);
  EXPECT_EQ(to_newick(s), "A;");
}

TEST(SpeciesMap, RejectsMalformedRows) {
  EXPECT_THROW(parse_species_map("a\n"), ParseError);
  EXPECT_THROW(parse_species_map("a\tA\na\tB\n"), ParseError);
}
