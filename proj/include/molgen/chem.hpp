// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace molgen {

// ---------------------------------------------------------------------------
// Vocabulary
//
// Character-level: one id per SMILES character plus the three specials. The
// table is fixed at compile time so token ids are stable across runs, files
// and checkpoints.
// ---------------------------------------------------------------------------

namespace vocab {

constexpr int kPad = 0;
constexpr int kBegin = 1;
constexpr int kEnd = 2;

int size();

// -1 when the character is outside the SMILES alphabet.
int char_to_id(char c);

// '\0' for special tokens.
char id_to_char(int id);

bool is_special(int id);

}  // namespace vocab

using TokenSequence = std::vector<int>;

// ---------------------------------------------------------------------------
// Molecular graph
// ---------------------------------------------------------------------------

enum class BondOrder : unsigned char { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

struct Atom {
  std::string element;  // capitalized symbol ("C", "Cl", ...)
  bool aromatic = false;
  int charge = 0;
  int explicit_h = 0;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::Single;
};

struct MolecularGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Character ids bracketed by [BEGIN]/[END]. Throws UnknownCharacter, TooLong.
TokenSequence tokenize(const std::string& smiles, int max_len);

// Inverse of tokenize; strips specials. Throws MalformedSequence when the
// framing is broken or the body is empty.
std::string detokenize(const TokenSequence& tokens);

// Full grammar parse. Throws SyntaxError, UnclosedRing, BadBracketAtom.
MolecularGraph parse_graph(const std::string& smiles);

// True iff parse_graph succeeds.
bool validate(const std::string& smiles);

// Molecule list file: one SMILES per line, '#' comment lines and blank lines
// ignored. Throws IoError.
std::vector<std::string> read_molecule_list(const std::string& path);

}  // namespace molgen
