#include "pedteach/regex.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <utility>

#include "pedteach/errors.hpp"

namespace pedteach {

RegexNode RegexNode::make_literal(char c) {
  RegexNode n;
  n.kind = Kind::Literal;
  n.literal = c;
  return n;
}

RegexNode RegexNode::make_any() {
  RegexNode n;
  n.kind = Kind::AnyChar;
  return n;
}

RegexNode RegexNode::make_class(const CharSet& chars) {
  if (chars.none()) throw InvalidParams("character class must be nonempty");
  RegexNode n;
  n.kind = Kind::CharClass;
  n.chars = chars;
  return n;
}

RegexNode RegexNode::make_concat(std::vector<RegexNode> children) {
  RegexNode n;
  n.kind = Kind::Concat;
  n.children = std::move(children);
  return n;
}

RegexNode RegexNode::make_repeat(RegexNode child, std::size_t min,
                                 std::optional<std::size_t> max) {
  if (max && *max < min) throw InvalidParams("repeat max below min");
  RegexNode n;
  n.kind = Kind::Repeat;
  n.children.push_back(std::move(child));
  n.min = min;
  n.max = max;
  return n;
}

namespace {

constexpr std::size_t kMaxRepeatCount = 1000;

CharSet digit_set() {
  CharSet s;
  for (char c = '0'; c <= '9'; ++c) s.set(static_cast<unsigned char>(c));
  return s;
}

bool is_metachar(char c) {
  switch (c) {
    case '.': case '[': case ']': case '{': case '}': case '(': case ')':
    case '*': case '+': case '?': case '|': case '^': case '$': case '\\':
      return true;
    default:
      return false;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view p) : p_(p) {}

  RegexAst run() {
    if (p_.empty()) fail(0, "empty pattern");
    if (p_[0] != '^') fail(0, "missing ^ anchor");
    pos_ = 1;
    std::vector<RegexNode> items;
    bool anchored = false;
    while (pos_ < p_.size()) {
      char c = p_[pos_];
      if (c == '$') {
        if (pos_ + 1 != p_.size()) fail(pos_, "$ anchor must end the pattern");
        anchored = true;
        ++pos_;
        break;
      }
      if (c == '*' || c == '+' || c == '?' || (c == '{' && !items.empty())) {
        if (items.empty()) fail(pos_, "quantifier has nothing to repeat");
        if (items.back().kind == RegexNode::Kind::Repeat) fail(pos_, "stacked quantifier");
        std::size_t at = pos_;
        auto [min, max] = quantifier();
        if (max && *max < min) fail(at, "quantifier max below min");
        items.back() = RegexNode::make_repeat(std::move(items.back()), min, max);
        continue;
      }
      items.push_back(atom());
    }
    if (!anchored) fail(p_.size(), "missing $ anchor");
    RegexAst ast;
    ast.root = items.size() == 1 ? std::move(items.front()) : RegexNode::make_concat(std::move(items));
    return ast;
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& msg) { throw SyntaxError(at, msg); }

  RegexNode atom() {
    char c = p_[pos_];
    switch (c) {
      case '.':
        ++pos_;
        return RegexNode::make_any();
      case '[':
        return char_class();
      case '\\':
        return escape_atom();
      case ']':
        fail(pos_, "unbalanced ]");
      case '{':
        fail(pos_, "quantifier has nothing to repeat");
      case '}':
        fail(pos_, "unbalanced }");
      case '(': case ')': case '|':
        fail(pos_, std::string("unsupported construct '") + c + "'");
      case '^':
        fail(pos_, "^ anchor must start the pattern");
      default:
        ++pos_;
        return RegexNode::make_literal(c);
    }
  }

  RegexNode escape_atom() {
    std::size_t at = pos_;
    if (pos_ + 1 >= p_.size()) fail(at, "trailing backslash");
    char e = p_[pos_ + 1];
    pos_ += 2;
    if (e == 'd') return RegexNode::make_class(digit_set());
    if (std::isalnum(static_cast<unsigned char>(e))) {
      fail(at, std::string("unsupported escape \\") + e);
    }
    return RegexNode::make_literal(e);
  }

  RegexNode char_class() {
    std::size_t open = pos_;
    ++pos_;
    if (pos_ < p_.size() && p_[pos_] == '^') fail(pos_, "unsupported construct: negated class");
    CharSet set;
    bool closed = false;
    while (pos_ < p_.size()) {
      char c = p_[pos_];
      if (c == ']') {
        closed = true;
        ++pos_;
        break;
      }
      std::size_t at = pos_;
      if (c == '\\') {
        if (pos_ + 1 >= p_.size()) fail(at, "trailing backslash");
        char e = p_[pos_ + 1];
        pos_ += 2;
        if (e == 'd') {
          set |= digit_set();
          continue;
        }
        if (std::isalnum(static_cast<unsigned char>(e))) {
          fail(at, std::string("unsupported escape \\") + e);
        }
        c = e;
      } else {
        ++pos_;
      }
      // Range, unless the dash is the last thing before ].
      if (pos_ + 1 < p_.size() && p_[pos_] == '-' && p_[pos_ + 1] != ']') {
        ++pos_;
        char hi = p_[pos_];
        if (hi == '\\') {
          if (pos_ + 1 >= p_.size()) fail(pos_, "trailing backslash");
          hi = p_[pos_ + 1];
          if (std::isalnum(static_cast<unsigned char>(hi))) fail(pos_, "escape cannot bound a range");
          ++pos_;
        }
        ++pos_;
        auto lo_u = static_cast<unsigned char>(c);
        auto hi_u = static_cast<unsigned char>(hi);
        if (lo_u > hi_u) fail(at, "reversed range in class");
        for (unsigned v = lo_u; v <= hi_u; ++v) set.set(v);
        continue;
      }
      set.set(static_cast<unsigned char>(c));
    }
    if (!closed) fail(open, "unbalanced [");
    if (set.none()) fail(open, "empty character class");
    return RegexNode::make_class(set);
  }

  std::size_t number() {
    std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < p_.size() && std::isdigit(static_cast<unsigned char>(p_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(p_[pos_] - '0');
      if (value > kMaxRepeatCount) fail(start, "repeat count too large");
      ++pos_;
    }
    if (pos_ == start) fail(pos_, "expected a repeat count");
    return value;
  }

  std::pair<std::size_t, std::optional<std::size_t>> quantifier() {
    char c = p_[pos_];
    if (c == '*') { ++pos_; return {0, std::nullopt}; }
    if (c == '+') { ++pos_; return {1, std::nullopt}; }
    if (c == '?') { ++pos_; return {0, 1}; }
    std::size_t open = pos_;
    ++pos_;  // '{'
    std::size_t min = number();
    std::optional<std::size_t> max = min;
    if (pos_ < p_.size() && p_[pos_] == ',') {
      ++pos_;
      if (pos_ < p_.size() && p_[pos_] == '}') {
        max.reset();
      } else {
        max = number();
      }
    }
    if (pos_ >= p_.size() || p_[pos_] != '}') fail(open, "unbalanced {");
    ++pos_;
    return {min, max};
  }

  std::string_view p_;
  std::size_t pos_ = 0;
};

void put_escaped(std::string& out, char c, bool in_class) {
  bool esc = in_class ? (c == ']' || c == '[' || c == '\\' || c == '-' || c == '^') : is_metachar(c);
  if (esc) out.push_back('\\');
  out.push_back(c);
}

void serialize_class(std::string& out, const CharSet& set) {
  if (set == digit_set()) {
    out += "\\d";
    return;
  }
  out.push_back('[');
  unsigned v = 0;
  while (v < 256) {
    if (!set.test(v)) {
      ++v;
      continue;
    }
    unsigned end = v;
    while (end + 1 < 256 && set.test(end + 1)) ++end;
    if (end - v >= 2) {
      put_escaped(out, static_cast<char>(v), true);
      out.push_back('-');
      put_escaped(out, static_cast<char>(end), true);
    } else {
      for (unsigned k = v; k <= end; ++k) put_escaped(out, static_cast<char>(k), true);
    }
    v = end + 1;
  }
  out.push_back(']');
}

void serialize_node(std::string& out, const RegexNode& n) {
  switch (n.kind) {
    case RegexNode::Kind::Literal:
      put_escaped(out, n.literal, false);
      break;
    case RegexNode::Kind::AnyChar:
      out.push_back('.');
      break;
    case RegexNode::Kind::CharClass:
      serialize_class(out, n.chars);
      break;
    case RegexNode::Kind::Concat:
      for (const auto& child : n.children) serialize_node(out, child);
      break;
    case RegexNode::Kind::Repeat:
      serialize_node(out, n.children.front());
      if (!n.max) {
        if (n.min == 0) out.push_back('*');
        else if (n.min == 1) out.push_back('+');
        else out += "{" + std::to_string(n.min) + ",}";
      } else if (n.min == 0 && *n.max == 1) {
        out.push_back('?');
      } else if (n.min == *n.max) {
        out += "{" + std::to_string(n.min) + "}";
      } else {
        out += "{" + std::to_string(n.min) + "," + std::to_string(*n.max) + "}";
      }
      break;
  }
}

std::size_t count_nodes(const RegexNode& n) {
  std::size_t total = 1;
  for (const auto& child : n.children) total += count_nodes(child);
  return total;
}

// Builds backwards: every fragment is compiled with its continuation known.
class NfaBuilder {
 public:
  explicit NfaBuilder(std::vector<Nfa::State>& states) : states_(states) {}

  int add(Nfa::State s) {
    states_.push_back(std::move(s));
    return static_cast<int>(states_.size()) - 1;
  }

  int char_state(const CharSet& accepts, int next) {
    Nfa::State s;
    s.kind = Nfa::State::Kind::Char;
    s.accepts = accepts;
    s.out = next;
    return add(std::move(s));
  }

  int split(int a, int b) {
    Nfa::State s;
    s.kind = Nfa::State::Kind::Split;
    s.out = a;
    s.out1 = b;
    return add(std::move(s));
  }

  int build(const RegexNode& n, int next) {
    switch (n.kind) {
      case RegexNode::Kind::Literal: {
        CharSet s;
        s.set(static_cast<unsigned char>(n.literal));
        return char_state(s, next);
      }
      case RegexNode::Kind::AnyChar:
        return char_state(CharSet().set(), next);
      case RegexNode::Kind::CharClass:
        return char_state(n.chars, next);
      case RegexNode::Kind::Concat: {
        int cur = next;
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) cur = build(*it, cur);
        return cur;
      }
      case RegexNode::Kind::Repeat: {
        const RegexNode& child = n.children.front();
        int cur = next;
        if (!n.max) {
          int loop = split(-1, next);
          states_[loop].out = build(child, loop);
          cur = loop;
        } else {
          for (std::size_t i = n.min; i < *n.max; ++i) cur = split(build(child, cur), next);
        }
        for (std::size_t i = 0; i < n.min; ++i) cur = build(child, cur);
        return cur;
      }
    }
    return next;
  }

 private:
  std::vector<Nfa::State>& states_;
};

void add_closure(const std::vector<Nfa::State>& states, int s, std::vector<int>& set,
                 std::vector<std::size_t>& mark, std::size_t generation, std::vector<int>& stack) {
  stack.push_back(s);
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    if (cur < 0 || mark[static_cast<std::size_t>(cur)] == generation) continue;
    mark[static_cast<std::size_t>(cur)] = generation;
    const auto& st = states[static_cast<std::size_t>(cur)];
    if (st.kind == Nfa::State::Kind::Split) {
      stack.push_back(st.out1);
      stack.push_back(st.out);
    } else {
      set.push_back(cur);
    }
  }
}

}  // namespace

RegexAst parse(std::string_view pattern) { return Parser(pattern).run(); }

std::string serialize(const RegexAst& ast) {
  std::string out = "^";
  serialize_node(out, ast.root);
  out.push_back('$');
  return out;
}

std::size_t description_length(const RegexAst& ast) { return count_nodes(ast.root); }

Nfa compile_nfa(const RegexAst& ast) {
  Nfa nfa;
  NfaBuilder b(nfa.states_);
  int match = b.add(Nfa::State{});
  nfa.start_ = b.build(ast.root, match);
  return nfa;
}

SimulationTrace simulate_traced(const Nfa& nfa, std::string_view text) {
  const auto& states = nfa.states();
  std::vector<std::size_t> mark(states.size(), 0);
  std::vector<int> current, next, stack;
  std::size_t generation = 1;
  SimulationTrace trace;

  add_closure(states, nfa.start(), current, mark, generation, stack);
  trace.frontiers = 1;
  for (char ch : text) {
    if (current.empty()) break;
    ++generation;
    next.clear();
    auto byte = static_cast<unsigned char>(ch);
    for (int s : current) {
      const auto& st = states[static_cast<std::size_t>(s)];
      if (st.kind == Nfa::State::Kind::Char && st.accepts.test(byte)) {
        add_closure(states, st.out, next, mark, generation, stack);
      }
    }
    current.swap(next);
    ++trace.frontiers;
  }
  // An early exit leaves unconsumed input, which can never be accepted.
  if (trace.frontiers == text.size() + 1) {
    trace.accepted = std::any_of(current.begin(), current.end(), [&](int s) {
      return states[static_cast<std::size_t>(s)].kind == Nfa::State::Kind::Match;
    });
  }
  return trace;
}

bool simulate(const Nfa& nfa, std::string_view text) { return simulate_traced(nfa, text).accepted; }

bool matches(const RegexAst& ast, std::string_view text) { return simulate(compile_nfa(ast), text); }

Regex::Regex(RegexAst ast)
    : ast_(std::move(ast)),
      canonical_(serialize(ast_)),
      length_(pedteach::description_length(ast_)),
      nfa_(std::make_shared<const Nfa>(compile_nfa(ast_))) {}

Regex Regex::parse(std::string_view pattern) { return Regex(pedteach::parse(pattern)); }

bool Regex::matches(std::string_view text) const { return simulate(*nfa_, text); }

Alphabet::Alphabet(std::string_view chars) : chars_(chars) {
  std::sort(chars_.begin(), chars_.end());
  chars_.erase(std::unique(chars_.begin(), chars_.end()), chars_.end());
  if (chars_.empty()) throw InvalidParams("alphabet must be nonempty");
}

std::string Alphabet::chars_of(const RegexAst& ast) {
  CharSet seen;
  std::vector<const RegexNode*> todo{&ast.root};
  while (!todo.empty()) {
    const RegexNode* n = todo.back();
    todo.pop_back();
    if (n->kind == RegexNode::Kind::Literal) seen.set(static_cast<unsigned char>(n->literal));
    if (n->kind == RegexNode::Kind::CharClass) seen |= n->chars;
    for (const auto& c : n->children) todo.push_back(&c);
  }
  std::string out;
  for (unsigned v = 0; v < 256; ++v) {
    if (seen.test(v)) out.push_back(static_cast<char>(v));
  }
  return out;
}

StringEnumerator::StringEnumerator(Alphabet alphabet, std::size_t max_len)
    : alphabet_(std::move(alphabet)), max_len_(max_len) {}

bool StringEnumerator::next(std::string& out) {
  if (done_) return false;
  const std::string& chars = alphabet_.chars();
  if (!started_) {
    started_ = true;
  } else {
    // Odometer increment; roll over into the next length.
    std::size_t i = digits_.size();
    while (i > 0) {
      --i;
      if (++digits_[i] < chars.size()) break;
      digits_[i] = 0;
      if (i == 0) {
        if (digits_.size() == max_len_) {
          done_ = true;
          return false;
        }
        digits_.assign(digits_.size() + 1, 0);
        break;
      }
    }
    if (digits_.empty()) {
      if (max_len_ == 0) {
        done_ = true;
        return false;
      }
      digits_.assign(1, 0);
    }
  }
  out.resize(digits_.size());
  for (std::size_t k = 0; k < digits_.size(); ++k) out[k] = chars[digits_[k]];
  return true;
}

std::vector<std::string> enumerate_strings(const Alphabet& alphabet, std::size_t max_len) {
  std::vector<std::string> out;
  StringEnumerator e(alphabet, max_len);
  std::string s;
  while (e.next(s)) out.push_back(s);
  return out;
}

bool is_printable_ascii(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](char c) { return c >= 0x20 && c <= 0x7e; });
}

}  // namespace pedteach
