// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "molgen/chem.hpp"
#include "molgen/errors.hpp"
#include "molgen/rng.hpp"

using namespace molgen;

namespace {

// Undirected bond set with orders, for order-insensitive graph comparison.
std::set<std::tuple<int, int, int>> bond_set(const MolecularGraph& g) {
  std::set<std::tuple<int, int, int>> s;
  for (const auto& b : g.bonds) {
    s.insert({std::min(b.a, b.b), std::max(b.a, b.b), static_cast<int>(b.order)});
  }
  return s;
}

}  // namespace

TEST_CASE("vocabulary is fixed and self-consistent") {
  CHECK(vocab::size() == 41);
  CHECK(vocab::kPad == 0);
  CHECK(vocab::kBegin == 1);
  CHECK(vocab::kEnd == 2);
  // Every printable SMILES character round-trips; ids are dense in [3, V).
  std::set<int> seen;
  for (int c = 0; c < 256; ++c) {
    const int id = vocab::char_to_id(static_cast<char>(c));
    if (id < 0) continue;
    CHECK(id >= 3);
    CHECK(id < vocab::size());
    CHECK(vocab::id_to_char(id) == static_cast<char>(c));
    seen.insert(id);
  }
  CHECK(static_cast<int>(seen.size()) == vocab::size() - 3);
  CHECK(vocab::is_special(vocab::kPad));
  CHECK(vocab::is_special(vocab::kBegin));
  CHECK(vocab::is_special(vocab::kEnd));
  CHECK_FALSE(vocab::is_special(vocab::char_to_id('C')));
}

TEST_CASE("tokenize produces framed per-character ids") {
  CHECK(tokenize("CCO", 64) == TokenSequence{1, 22, 22, 27, 2});
  CHECK(tokenize("c1ccccc1", 64) == TokenSequence{1, 34, 10, 34, 34, 34, 34, 34, 10, 2});
  CHECK(tokenize("CC(=O)O", 64) == TokenSequence{1, 22, 22, 4, 19, 27, 5, 27, 2});
  CHECK(tokenize("C[NH3+]", 64) == TokenSequence{1, 22, 30, 26, 24, 12, 6, 32, 2});
  // Two-letter elements stay two character tokens.
  CHECK(tokenize("ClCCBr", 64) == TokenSequence{1, 22, 35, 22, 22, 21, 39, 2});
}

TEST_CASE("tokenize error cases") {
  CHECK_THROWS_AS(tokenize("CC?", 64), UnknownCharacter);
  CHECK_THROWS_AS(tokenize("C O", 64), UnknownCharacter);
  CHECK_THROWS_AS(tokenize("", 64), EmptySequence);
  // length + 2 must fit in max_len
  CHECK_NOTHROW(tokenize("CCO", 5));
  CHECK_THROWS_AS(tokenize("CCO", 4), TooLong);
}

TEST_CASE("detokenize inverts tokenize and rejects broken framing") {
  for (const std::string s : {"CCO", "c1ccccc1", "CC(=O)O", "C[NH3+]", "ClCCBr", "C/C=C\\C"}) {
    CHECK(detokenize(tokenize(s, 64)) == s);
  }
  // Pads after [END] are tolerated.
  TokenSequence padded = tokenize("CCO", 64);
  padded.push_back(vocab::kPad);
  padded.push_back(vocab::kPad);
  CHECK(detokenize(padded) == "CCO");

  CHECK_THROWS_AS(detokenize(TokenSequence{1, 2}), MalformedSequence);
  CHECK_THROWS_AS(detokenize(TokenSequence{1, 22, 0}), MalformedSequence);
  CHECK_THROWS_AS(detokenize(TokenSequence{22, 22, 2}), MalformedSequence);
  CHECK_THROWS_AS(detokenize(TokenSequence{}), MalformedSequence);
}

TEST_CASE("parse_graph on linear chains") {
  const MolecularGraph g = parse_graph("CCO");
  REQUIRE(g.atoms.size() == 3);
  CHECK(g.atoms[0].element == "C");
  CHECK(g.atoms[1].element == "C");
  CHECK(g.atoms[2].element == "O");
  CHECK_FALSE(g.atoms[0].aromatic);
  REQUIRE(g.bonds.size() == 2);
  CHECK(bond_set(g) == std::set<std::tuple<int, int, int>>{{0, 1, 1}, {1, 2, 1}});
}

TEST_CASE("parse_graph ring closure") {
  const MolecularGraph g = parse_graph("C1CC1");
  REQUIRE(g.atoms.size() == 3);
  REQUIRE(g.bonds.size() == 3);
  CHECK(bond_set(g) == std::set<std::tuple<int, int, int>>{{0, 1, 1}, {0, 2, 1}, {1, 2, 1}});
}

TEST_CASE("parse_graph branches and bond orders") {
  const MolecularGraph g = parse_graph("CC(=O)O");
  REQUIRE(g.atoms.size() == 4);
  REQUIRE(g.bonds.size() == 3);
  CHECK(bond_set(g) == std::set<std::tuple<int, int, int>>{{0, 1, 1}, {1, 2, 2}, {1, 3, 1}});

  const MolecularGraph t = parse_graph("C#N");
  REQUIRE(t.bonds.size() == 1);
  CHECK(t.bonds[0].order == BondOrder::Triple);
}

TEST_CASE("parse_graph aromatic ring") {
  const MolecularGraph g = parse_graph("c1ccccc1");
  REQUIRE(g.atoms.size() == 6);
  REQUIRE(g.bonds.size() == 6);
  for (const auto& a : g.atoms) {
    CHECK(a.element == "C");
    CHECK(a.aromatic);
  }
  for (const auto& b : g.bonds) CHECK(b.order == BondOrder::Aromatic);
}

TEST_CASE("parse_graph bracket atoms") {
  const MolecularGraph g = parse_graph("C[NH3+]");
  REQUIRE(g.atoms.size() == 2);
  CHECK(g.atoms[1].element == "N");
  CHECK(g.atoms[1].charge == 1);
  CHECK(g.atoms[1].explicit_h == 3);

  const MolecularGraph q = parse_graph("[O-]C");
  CHECK(q.atoms[0].charge == -1);

  const MolecularGraph two = parse_graph("[Se]");  // two-letter bracket element
  CHECK(two.atoms[0].element == "Se");

  const MolecularGraph dbl = parse_graph("[Fe+2]");
  CHECK(dbl.atoms[0].charge == 2);
  const MolecularGraph rep = parse_graph("[O--]");
  CHECK(rep.atoms[0].charge == -2);
}

TEST_CASE("parse_graph maximal munch for Cl and Br") {
  const MolecularGraph g = parse_graph("ClCCBr");
  REQUIRE(g.atoms.size() == 4);
  CHECK(g.atoms[0].element == "Cl");
  CHECK(g.atoms[3].element == "Br");
}

TEST_CASE("parse_graph error cases") {
  CHECK_THROWS_AS(parse_graph("C1CC"), UnclosedRing);
  CHECK_THROWS_AS(parse_graph("C((C"), SyntaxError);
  CHECK_THROWS_AS(parse_graph("C)C"), SyntaxError);
  CHECK_THROWS_AS(parse_graph("C="), SyntaxError);
  CHECK_THROWS_AS(parse_graph("=CC"), SyntaxError);
  CHECK_THROWS_AS(parse_graph(""), SyntaxError);
  CHECK_THROWS_AS(parse_graph("C()C"), SyntaxError);
  CHECK_THROWS_AS(parse_graph("C11"), SyntaxError);   // ring bond to itself
  CHECK_THROWS_AS(parse_graph("C[]"), BadBracketAtom);
  CHECK_THROWS_AS(parse_graph("C[C"), BadBracketAtom);
  CHECK_THROWS_AS(parse_graph("C[+]"), BadBracketAtom);
}

TEST_CASE("validate mirrors parse_graph success") {
  CHECK(validate("CCO"));
  CHECK(validate("c1ccccc1O"));
  CHECK_FALSE(validate("C((C"));
  CHECK_FALSE(validate("C1CC"));

  // Fuzz: validate never throws and always agrees with parse_graph.
  Rng rng(1234);
  const std::string alphabet = "CNOcno()=#123[]+-";
  for (int trial = 0; trial < 500; ++trial) {
    const int len = 1 + static_cast<int>(rng.uniform_int(12));
    std::string s;
    for (int i = 0; i < len; ++i) s.push_back(alphabet[rng.uniform_int(alphabet.size())]);
    bool ok_parse = true;
    try {
      parse_graph(s);
    } catch (const Error&) {
      ok_parse = false;
    }
    CHECK(validate(s) == ok_parse);
  }
}

TEST_CASE("read_molecule_list skips comments and blanks") {
  const std::string path = "molecule_list_test.txt";
  {
    std::ofstream out(path);
    out << "# header comment\nCCO\n\nc1ccccc1\n# tail\nCC(=O)O\n";
  }
  const auto mols = read_molecule_list(path);
  REQUIRE(mols.size() == 3);
  CHECK(mols[0] == "CCO");
  CHECK(mols[1] == "c1ccccc1");
  CHECK(mols[2] == "CC(=O)O");
  CHECK_THROWS_AS(read_molecule_list("definitely_missing_file.txt"), IoError);
}
