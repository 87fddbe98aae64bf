// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include "doctest.h"
#include "molgen/chem.hpp"
#include "molgen/errors.hpp"
#include "molgen/properties.hpp"
#include "molgen/rng.hpp"

using namespace molgen;

TEST_CASE("surrogate properties on hand-computed molecules") {
  // CCO: 2 C, 1 O, 0 rings, 3 heavy, 0 aromatic.
  const PropertyVector p = surrogate_properties(parse_graph("CCO"));
  CHECK(p.plogp == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(p.qed == doctest::Approx(0.33181222783183384).epsilon(1e-12));
  CHECK(p.drd2 == doctest::Approx(0.01798620996209156).epsilon(1e-12));

  // 25-carbon chain: qed hits the logistic midpoint offset exactly.
  const PropertyVector chain = surrogate_properties(parse_graph(std::string(25, 'C')));
  CHECK(chain.qed == doctest::Approx(0.8175744761936437).epsilon(1e-12));
  CHECK(chain.plogp == doctest::Approx(10.0).epsilon(1e-12));

  // Benzene: 6 aromatic carbons, one ring.
  const PropertyVector benzene = surrogate_properties(parse_graph("c1ccccc1"));
  CHECK(benzene.plogp == doctest::Approx(0.4 * 6 - 0.3).epsilon(1e-12));
  CHECK(benzene.drd2 == doctest::Approx(0.2689414213699951).epsilon(1e-12));
  CHECK(benzene.qed == doctest::Approx(0.401312339887548).epsilon(1e-12));

  // Cyclopropane: cyclomatic ring count 1.
  const PropertyVector ring = surrogate_properties(parse_graph("C1CC1"));
  CHECK(ring.plogp == doctest::Approx(0.4 * 3 - 0.3).epsilon(1e-12));

  CHECK_THROWS_AS(surrogate_properties(MolecularGraph{}), EmptyGraph);
}

TEST_CASE("surrogate properties ignore atom ordering") {
  MolecularGraph g = parse_graph("CC(=O)Oc1ccccc1");
  MolecularGraph rev;
  const int n = static_cast<int>(g.atoms.size());
  for (int i = n - 1; i >= 0; --i) rev.atoms.push_back(g.atoms[static_cast<size_t>(i)]);
  for (const Bond& b : g.bonds) {
    rev.bonds.push_back(Bond{n - 1 - b.b, n - 1 - b.a, b.order});
  }
  CHECK(surrogate_properties(g) == surrogate_properties(rev));
}

TEST_CASE("scaler round trip and basic algebra") {
  std::vector<PropertyVector> corpus;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    PropertyVector p;
    p.plogp = rng.uniform(-5.0, 8.0);
    p.qed = rng.uniform();
    p.drd2 = rng.uniform();
    corpus.push_back(p);
  }
  const PropertyScaler s = PropertyScaler::fit(corpus);
  CHECK(s.fitted());
  for (int d = 0; d < kNumProperties; ++d) CHECK(s.scale()[d] > 0.0);

  for (int i = 0; i < 100; ++i) {
    PropertyVector p;
    p.plogp = rng.uniform(-10.0, 10.0);
    p.qed = rng.uniform();
    p.drd2 = rng.uniform();
    const PropertyVector back = s.denormalize(s.normalize(p));
    for (int d = 0; d < kNumProperties; ++d) {
      CHECK(std::abs(back[d] - p[d]) < 1e-9);
    }
  }

  // shift=0 scale=1 is the identity; p == shift maps to zero.
  const PropertyScaler ident({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
  PropertyVector q{1.25, 0.5, 0.75};
  CHECK(ident.normalize(q) == q);
  PropertyVector at_shift{1.0, 2.0, 3.0};
  const PropertyScaler shifted({1.0, 2.0, 3.0}, {2.0, 2.0, 2.0});
  const PropertyVector z = shifted.normalize(at_shift);
  CHECK(z == PropertyVector{0.0, 0.0, 0.0});
}

TEST_CASE("scaler misuse") {
  PropertyScaler s;
  CHECK_THROWS_AS(s.normalize(PropertyVector{}), UnfittedScaler);
  CHECK_THROWS_AS(s.denormalize(PropertyVector{}), UnfittedScaler);
  CHECK_THROWS_AS(PropertyScaler::fit({}), EmptyCorpus);
  CHECK_THROWS_AS(PropertyScaler({0, 0, 0}, {1, 0, 1}), RangeError);

  // Constant column: floored scale keeps normalize finite.
  std::vector<PropertyVector> flat(10, PropertyVector{1.0, 0.5, 0.5});
  const PropertyScaler f = PropertyScaler::fit(flat);
  const PropertyVector n = f.normalize(flat[0]);
  CHECK(n == PropertyVector{0.0, 0.0, 0.0});
}

TEST_CASE("load_properties parses rows, header, comments") {
  const std::string path = "props_ok.tsv";
  {
    std::ofstream out(path);
    out << "smiles\tplogp\tqed\tdrd2\n";
    out << "# comment\n";
    out << "CCO\t-1.23\t0.41\t0.02\n";
    out << "CCN\t0.5\t0.9\t0.8\n";
  }
  int dups = -1;
  const auto m = load_properties(path, &dups);
  REQUIRE(m.size() == 2);
  CHECK(dups == 0);
  CHECK(m.at("CCO").plogp == doctest::Approx(-1.23));
  CHECK(m.at("CCO").qed == doctest::Approx(0.41));
  CHECK(m.at("CCO").drd2 == doctest::Approx(0.02));
}

TEST_CASE("load_properties duplicate rows: last wins with a warning count") {
  const std::string path = "props_dup.tsv";
  {
    std::ofstream out(path);
    out << "CCO\t1.0\t0.1\t0.1\nCCO\t2.0\t0.2\t0.2\n";
  }
  int dups = 0;
  const auto m = load_properties(path, &dups);
  REQUIRE(m.size() == 1);
  CHECK(dups == 1);
  CHECK(m.at("CCO").plogp == doctest::Approx(2.0));
}

TEST_CASE("load_properties error cases") {
  {
    std::ofstream out("props_range.tsv");
    out << "CCO\t1.0\t1.7\t0.1\n";
  }
  CHECK_THROWS_AS(load_properties("props_range.tsv"), RangeError);

  {
    std::ofstream out("props_bad.tsv");
    out << "CCO\t1.0\tnot_a_number\t0.1\n";
  }
  CHECK_THROWS_WITH_AS(load_properties("props_bad.tsv"),
                       doctest::Contains("props_bad.tsv:1"), ParseError);

  {
    std::ofstream out("props_fields.tsv");
    out << "CCO\t1.0\t0.5\n";
  }
  CHECK_THROWS_AS(load_properties("props_fields.tsv"), ParseError);

  CHECK_THROWS_AS(load_properties("no_such_props.tsv"), IoError);

  {
    std::ofstream out("props_empty.tsv");
  }
  CHECK(load_properties("props_empty.tsv").empty());
}
