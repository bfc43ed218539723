#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "triplerec/triplerec.hpp"

using namespace triplerec;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<fs::path> files(const char* sub) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(fs::path(TRIPLEREC_TEST_DATA) / sub)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string kind(const fs::path& p) { return p.filename().string().substr(0, p.filename().string().find('_')); }

std::string reserialize(const std::string& k, const std::string& text) {
  if (k == "gene") return to_newick(parse_gene_tree(text)) + "\n";
  if (k == "species") return to_newick(parse_species_tree(text)) + "\n";
  return to_tsv(parse_triples_tsv(text));
}

}  // namespace

TEST(Corpus, RoundTripIsFixpoint) {
  const auto all = files("roundtrip");
  ASSERT_GE(all.size(), 200u);
  for (const auto& p : all) {
    const auto text = slurp(p);
    EXPECT_EQ(reserialize(kind(p), text), text) << p.filename();
  }
}

TEST(Corpus, NegativeFilesRaisePositionedParseErrors) {
  const auto all = files("negative");
  ASSERT_GE(all.size(), 30u);
  for (const auto& p : all) {
    const auto text = slurp(p);
    try {
      reserialize(kind(p), text);
      ADD_FAILURE() << p.filename() << " was accepted";
    } catch (const ParseError& e) {
      const std::size_t bound = kind(p) == "triples" ? static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) + 1
                                                     : text.size();
      EXPECT_LE(e.position(), bound) << p.filename() << ": " << e.what();
    }
  }
}
