#pragma once

// Restricted, always-anchored regular expressions.
//
// Supported surface syntax (anchors are mandatory):
//   ^ ... $          whole-string match
//   x                literal (escape any of .[]{}()*+?|^$\- with a backslash)
//   .                any character
//   \d               the digits 0-9
//   [aA] [a-z] [\d_] explicit character classes (no negation)
//   * + ? {n} {n,} {n,m}  greedy quantifiers on a single atom
//
// Groups and alternation are not part of the language.

#include <bitset>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pedteach {

using CharSet = std::bitset<256>;

struct RegexNode {
  enum class Kind : std::uint8_t { Literal, AnyChar, CharClass, Concat, Repeat };

  Kind kind = Kind::Literal;
  char literal = '\0';              // Literal
  CharSet chars;                    // CharClass
  std::vector<RegexNode> children;  // Concat: ordered; Repeat: exactly one
  std::size_t min = 0;              // Repeat
  std::optional<std::size_t> max;   // Repeat; nullopt = unbounded

  static RegexNode make_literal(char c);
  static RegexNode make_any();
  static RegexNode make_class(const CharSet& chars);
  static RegexNode make_concat(std::vector<RegexNode> children);
  static RegexNode make_repeat(RegexNode child, std::size_t min, std::optional<std::size_t> max);

  bool operator==(const RegexNode&) const = default;
};

/// Parsed pattern. Matching is always against the whole string.
struct RegexAst {
  RegexNode root;

  bool operator==(const RegexAst&) const = default;
};

/// Parses `^...$`. Throws SyntaxError.
RegexAst parse(std::string_view pattern);

/// Canonical surface form: `\d` for the digit class, sorted classes with
/// ranges for runs of three or more, and the shortest quantifier spelling.
std::string serialize(const RegexAst& ast);

/// Number of AST nodes; a character class counts once.
std::size_t description_length(const RegexAst& ast);

/// Thompson automaton. States are indexed; `start` is the entry.
class Nfa {
 public:
  struct State {
    enum class Kind : std::uint8_t { Char, Split, Match };
    Kind kind = Kind::Match;
    CharSet accepts;  // Char
    int out = -1;     // Char, Split
    int out1 = -1;    // Split
  };

  const std::vector<State>& states() const noexcept { return states_; }
  int start() const noexcept { return start_; }

 private:
  friend Nfa compile_nfa(const RegexAst& ast);
  std::vector<State> states_;
  int start_ = -1;
};

Nfa compile_nfa(const RegexAst& ast);

struct SimulationTrace {
  bool accepted = false;
  std::size_t frontiers = 0;  // state sets materialized, at most |x|+1
};

bool simulate(const Nfa& nfa, std::string_view text);
SimulationTrace simulate_traced(const Nfa& nfa, std::string_view text);

/// Whole-string membership. Compiles on every call; prefer Regex for reuse.
bool matches(const RegexAst& ast, std::string_view text);

/// A parsed regex bundled with its canonical form and compiled automaton.
/// Cheap to copy; the automaton is shared.
class Regex {
 public:
  explicit Regex(RegexAst ast);
  static Regex parse(std::string_view pattern);

  const RegexAst& ast() const noexcept { return ast_; }
  const std::string& canonical() const noexcept { return canonical_; }
  std::size_t description_length() const noexcept { return length_; }
  bool matches(std::string_view text) const;
  const Nfa& nfa() const noexcept { return *nfa_; }

  /// Identity is canonical-serialization equality, not language equivalence.
  bool operator==(const Regex& other) const { return canonical_ == other.canonical_; }

 private:
  RegexAst ast_;
  std::string canonical_;
  std::size_t length_ = 0;
  std::shared_ptr<const Nfa> nfa_;
};

/// Finite, deduplicated, byte-ordered character set used for enumeration
/// and sampling.
class Alphabet {
 public:
  /// Throws std::invalid_argument if `chars` is empty.
  explicit Alphabet(std::string_view chars);

  const std::string& chars() const noexcept { return chars_; }
  std::size_t size() const noexcept { return chars_.size(); }

  /// Characters named by literals and classes in the given regexes.
  static std::string chars_of(const RegexAst& ast);

 private:
  std::string chars_;
};

/// Yields every string over an alphabet up to a maximum length, shortest
/// first and lexicographic (in alphabet order) within a length.
class StringEnumerator {
 public:
  StringEnumerator(Alphabet alphabet, std::size_t max_len);

  /// Writes the next string into `out`; returns false when exhausted.
  bool next(std::string& out);

 private:
  Alphabet alphabet_;
  std::size_t max_len_;
  std::vector<std::size_t> digits_;
  bool started_ = false;
  bool done_ = false;
};

std::vector<std::string> enumerate_strings(const Alphabet& alphabet, std::size_t max_len);

/// Printable ASCII (0x20..0x7e).
bool is_printable_ascii(std::string_view text);

}  // namespace pedteach
