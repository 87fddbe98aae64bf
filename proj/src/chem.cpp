// SPDX-License-Identifier: Apache-2.0

#include "molgen/chem.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <map>

#include "molgen/errors.hpp"

namespace molgen {

namespace vocab {

namespace {

// Order is load-bearing: ids are baked into checkpoints and TSV artifacts.
constexpr char kAlphabet[] = "#()+-/0123456789=@BCFHINOPS[\\]bclnoprs";
constexpr int kAlphabetLen = static_cast<int>(sizeof(kAlphabet)) - 1;

struct CharTable {
  std::array<int, 256> to_id;
  CharTable() {
    to_id.fill(-1);
    for (int i = 0; i < kAlphabetLen; ++i) {
      to_id[static_cast<unsigned char>(kAlphabet[i])] = 3 + i;
    }
  }
};

const CharTable& table() {
  static const CharTable t;
  return t;
}

}  // namespace

int size() { return 3 + kAlphabetLen; }

int char_to_id(char c) { return table().to_id[static_cast<unsigned char>(c)]; }

char id_to_char(int id) {
  if (id < 3 || id >= size()) return '\0';
  return kAlphabet[id - 3];
}

bool is_special(int id) { return id == kPad || id == kBegin || id == kEnd; }

}  // namespace vocab

TokenSequence tokenize(const std::string& smiles, int max_len) {
  if (smiles.empty()) throw EmptySequence("tokenize: empty SMILES");
  if (static_cast<int>(smiles.size()) + 2 > max_len) {
    throw TooLong("tokenize: length " + std::to_string(smiles.size()) + " + 2 exceeds max " +
                  std::to_string(max_len));
  }
  TokenSequence out;
  out.reserve(smiles.size() + 2);
  out.push_back(vocab::kBegin);
  for (char c : smiles) {
    const int id = vocab::char_to_id(c);
    if (id < 0) {
      throw UnknownCharacter(std::string("tokenize: character '") + c + "' not in vocabulary");
    }
    out.push_back(id);
  }
  out.push_back(vocab::kEnd);
  return out;
}

std::string detokenize(const TokenSequence& tokens) {
  if (tokens.empty() || tokens.front() != vocab::kBegin) {
    throw MalformedSequence("detokenize: missing [BEGIN]");
  }
  std::string out;
  size_t i = 1;
  for (; i < tokens.size(); ++i) {
    const int id = tokens[i];
    if (id == vocab::kEnd) break;
    if (id == vocab::kPad || id == vocab::kBegin) {
      throw MalformedSequence("detokenize: unexpected special token in body");
    }
    const char c = vocab::id_to_char(id);
    if (c == '\0') throw MalformedSequence("detokenize: id out of range");
    out.push_back(c);
  }
  if (i == tokens.size()) throw MalformedSequence("detokenize: missing [END]");
  for (size_t j = i + 1; j < tokens.size(); ++j) {
    if (tokens[j] != vocab::kPad) throw MalformedSequence("detokenize: non-pad after [END]");
  }
  if (out.empty()) throw MalformedSequence("detokenize: empty molecule");
  return out;
}

// ---------------------------------------------------------------------------
// SMILES parser
// ---------------------------------------------------------------------------

namespace {

bool is_organic_aromatic(char c) {
  return c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's';
}

// Two-letter symbols recognized inside brackets; maximal munch.
bool known_two_letter(const std::string& sym) {
  static const char* kTable[] = {"Al", "As", "Br", "Ca", "Cl", "Cu", "Fe", "Li", "Mg",
                                 "Mn", "Na", "Ni", "Se", "Si", "Sn", "Zn"};
  for (const char* t : kTable) {
    if (sym == t) return true;
  }
  return false;
}

struct RingOpening {
  int atom = -1;
  int bond_symbol = 0;  // 0 = none, else the character
};

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  MolecularGraph run() {
    if (s_.empty()) throw SyntaxError("empty SMILES");
    while (pos_ < s_.size()) {
      step();
    }
    finish();
    return std::move(graph_);
  }

 private:
  void step() {
    const char c = s_[pos_];
    if (std::isspace(static_cast<unsigned char>(c))) throw SyntaxError("whitespace in SMILES");
    switch (c) {
      case '(':
        if (prev_atom_ < 0) throw SyntaxError("branch before any atom");
        if (pending_bond_ != 0) throw SyntaxError("bond symbol before '('");
        stack_.push_back(prev_atom_);
        branch_fresh_.push_back(true);
        ++pos_;
        return;
      case ')':
        if (stack_.empty()) throw SyntaxError("unmatched ')'");
        if (pending_bond_ != 0) throw SyntaxError("dangling bond before ')'");
        if (branch_fresh_.back()) throw SyntaxError("empty branch");
        prev_atom_ = stack_.back();
        stack_.pop_back();
        branch_fresh_.pop_back();
        ++pos_;
        return;
      case '-':
      case '=':
      case '#':
      case '/':
      case '\\':
        if (pending_bond_ != 0) throw SyntaxError("two bond symbols in a row");
        if (prev_atom_ < 0) throw SyntaxError("bond symbol before any atom");
        pending_bond_ = c;
        ++pos_;
        return;
      default:
        break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_closure(c - '0');
      ++pos_;
      return;
    }
    if (c == '[') {
      add_atom(parse_bracket_atom());
      return;
    }
    add_atom(parse_organic_atom());
  }

  Atom parse_organic_atom() {
    const char c = s_[pos_];
    Atom atom;
    // Maximal munch over the organic subset: Cl and Br are single atoms even
    // though they tokenize as two characters.
    if (c == 'C' && pos_ + 1 < s_.size() && s_[pos_ + 1] == 'l') {
      atom.element = "Cl";
      pos_ += 2;
      return atom;
    }
    if (c == 'B' && pos_ + 1 < s_.size() && s_[pos_ + 1] == 'r') {
      atom.element = "Br";
      pos_ += 2;
      return atom;
    }
    switch (c) {
      case 'B': case 'C': case 'N': case 'O': case 'P': case 'S': case 'F': case 'I':
        atom.element = std::string(1, c);
        ++pos_;
        return atom;
      default:
        break;
    }
    if (is_organic_aromatic(c)) {
      atom.element = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      atom.aromatic = true;
      ++pos_;
      return atom;
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'");
  }

  Atom parse_bracket_atom() {
    const size_t open = pos_;
    ++pos_;  // consume '['
    Atom atom;
    // optional isotope (parsed, discarded)
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ >= s_.size()) throw BadBracketAtom("unterminated bracket atom");
    // element symbol
    char c = s_[pos_];
    if (std::isupper(static_cast<unsigned char>(c))) {
      std::string sym(1, c);
      if (pos_ + 1 < s_.size() && std::islower(static_cast<unsigned char>(s_[pos_ + 1])) &&
          known_two_letter(sym + s_[pos_ + 1])) {
        sym += s_[pos_ + 1];
        ++pos_;
      }
      atom.element = sym;
      ++pos_;
    } else if (is_organic_aromatic(c)) {
      atom.element = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      atom.aromatic = true;
      ++pos_;
    } else {
      throw BadBracketAtom(std::string("bad element in bracket atom at '") + c + "'");
    }
    // optional chirality (ignored; stereochemistry is out of scope)
    while (pos_ < s_.size() && s_[pos_] == '@') ++pos_;
    // optional hydrogen count
    if (pos_ < s_.size() && s_[pos_] == 'H') {
      ++pos_;
      int count = 1;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        count = 0;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
          count = count * 10 + (s_[pos_] - '0');
          ++pos_;
        }
      }
      atom.explicit_h = count;
    }
    // optional charge
    if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
      const int sign = s_[pos_] == '+' ? 1 : -1;
      const char sym = s_[pos_];
      int magnitude = 1;
      ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        magnitude = 0;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
          magnitude = magnitude * 10 + (s_[pos_] - '0');
          ++pos_;
        }
      } else {
        while (pos_ < s_.size() && s_[pos_] == sym) {
          ++magnitude;
          ++pos_;
        }
      }
      atom.charge = sign * magnitude;
    }
    if (pos_ >= s_.size() || s_[pos_] != ']') {
      throw BadBracketAtom("malformed bracket atom: " + s_.substr(open, pos_ - open + 1));
    }
    ++pos_;
    return atom;
  }

  void add_atom(Atom atom) {
    graph_.atoms.push_back(std::move(atom));
    const int idx = static_cast<int>(graph_.atoms.size()) - 1;
    if (prev_atom_ >= 0) {
      add_bond(prev_atom_, idx, pending_bond_);
    }
    pending_bond_ = 0;
    prev_atom_ = idx;
    if (!branch_fresh_.empty()) branch_fresh_.back() = false;
  }

  void ring_closure(int digit) {
    if (prev_atom_ < 0) throw SyntaxError("ring closure before any atom");
    RingOpening& slot = rings_[digit];
    if (slot.atom < 0) {
      slot.atom = prev_atom_;
      slot.bond_symbol = pending_bond_;
      pending_bond_ = 0;
      return;
    }
    int symbol = pending_bond_;
    pending_bond_ = 0;
    if (slot.bond_symbol != 0 && symbol != 0 && slot.bond_symbol != symbol) {
      throw SyntaxError("conflicting bond symbols on ring closure");
    }
    if (symbol == 0) symbol = slot.bond_symbol;
    if (slot.atom == prev_atom_) throw SyntaxError("ring closure to the same atom");
    add_bond(slot.atom, prev_atom_, symbol);
    slot = RingOpening{};
  }

  void add_bond(int a, int b, int symbol) {
    for (const Bond& bond : graph_.bonds) {
      if ((bond.a == a && bond.b == b) || (bond.a == b && bond.b == a)) {
        throw SyntaxError("duplicate bond between atoms");
      }
    }
    BondOrder order = BondOrder::Single;
    switch (symbol) {
      case 0:
        order = (graph_.atoms[a].aromatic && graph_.atoms[b].aromatic) ? BondOrder::Aromatic
                                                                       : BondOrder::Single;
        break;
      case '-': case '/': case '\\':
        order = BondOrder::Single;
        break;
      case '=':
        order = BondOrder::Double;
        break;
      case '#':
        order = BondOrder::Triple;
        break;
      default:
        throw SyntaxError("bad bond symbol");
    }
    graph_.bonds.push_back(Bond{a, b, order});
  }

  void finish() {
    if (!stack_.empty()) throw SyntaxError("unclosed '('");
    if (pending_bond_ != 0) throw SyntaxError("dangling bond at end of input");
    for (const auto& [digit, slot] : rings_) {
      if (slot.atom >= 0) {
        throw UnclosedRing("ring digit " + std::to_string(digit) + " never closed");
      }
    }
    if (graph_.atoms.empty()) throw SyntaxError("no atoms");
  }

  const std::string& s_;
  size_t pos_ = 0;
  MolecularGraph graph_;
  int prev_atom_ = -1;
  int pending_bond_ = 0;
  std::vector<int> stack_;
  std::vector<bool> branch_fresh_;
  std::map<int, RingOpening> rings_;
};

}  // namespace

MolecularGraph parse_graph(const std::string& smiles) { return Parser(smiles).run(); }

bool validate(const std::string& smiles) {
  try {
    parse_graph(smiles);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::vector<std::string> read_molecule_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open molecule list: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace molgen
