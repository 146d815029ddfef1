#pragma once

// Brzozowski-derivative matcher used only as a test oracle. It shares no code
// with the Thompson automaton in the library: the AST is translated into its
// own small algebra and strings are matched by repeated differentiation.

#include <bitset>
#include <memory>
#include <string_view>

#include "pedteach/regex.hpp"

namespace oracle {

struct Re;
using ReP = std::shared_ptr<const Re>;

struct Re {
  enum class Kind { Empty, Eps, Set, Seq, Alt, Star };
  Kind kind;
  std::bitset<256> set;
  ReP a, b;
};

inline ReP empty() {
  static const ReP e = std::make_shared<const Re>(Re{Re::Kind::Empty, {}, nullptr, nullptr});
  return e;
}

inline ReP eps() {
  static const ReP e = std::make_shared<const Re>(Re{Re::Kind::Eps, {}, nullptr, nullptr});
  return e;
}

inline ReP chars(const std::bitset<256>& s) {
  return std::make_shared<const Re>(Re{Re::Kind::Set, s, nullptr, nullptr});
}

inline ReP seq(ReP a, ReP b) {
  if (a->kind == Re::Kind::Empty || b->kind == Re::Kind::Empty) return empty();
  if (a->kind == Re::Kind::Eps) return b;
  if (b->kind == Re::Kind::Eps) return a;
  return std::make_shared<const Re>(Re{Re::Kind::Seq, {}, std::move(a), std::move(b)});
}

inline ReP alt(ReP a, ReP b) {
  if (a->kind == Re::Kind::Empty) return b;
  if (b->kind == Re::Kind::Empty) return a;
  return std::make_shared<const Re>(Re{Re::Kind::Alt, {}, std::move(a), std::move(b)});
}

inline ReP star(ReP a) {
  if (a->kind == Re::Kind::Empty || a->kind == Re::Kind::Eps) return eps();
  return std::make_shared<const Re>(Re{Re::Kind::Star, {}, std::move(a), nullptr});
}

inline bool nullable(const ReP& r) {
  switch (r->kind) {
    case Re::Kind::Empty: return false;
    case Re::Kind::Eps: return true;
    case Re::Kind::Set: return false;
    case Re::Kind::Seq: return nullable(r->a) && nullable(r->b);
    case Re::Kind::Alt: return nullable(r->a) || nullable(r->b);
    case Re::Kind::Star: return true;
  }
  return false;
}

inline ReP derive(const ReP& r, unsigned char c) {
  switch (r->kind) {
    case Re::Kind::Empty:
    case Re::Kind::Eps:
      return empty();
    case Re::Kind::Set:
      return r->set.test(c) ? eps() : empty();
    case Re::Kind::Seq: {
      ReP left = seq(derive(r->a, c), r->b);
      return nullable(r->a) ? alt(left, derive(r->b, c)) : left;
    }
    case Re::Kind::Alt:
      return alt(derive(r->a, c), derive(r->b, c));
    case Re::Kind::Star:
      return seq(derive(r->a, c), r);
  }
  return empty();
}

inline ReP translate(const pedteach::RegexNode& n) {
  using K = pedteach::RegexNode::Kind;
  switch (n.kind) {
    case K::Literal: {
      std::bitset<256> s;
      s.set(static_cast<unsigned char>(n.literal));
      return chars(s);
    }
    case K::AnyChar:
      return chars(std::bitset<256>().set());
    case K::CharClass:
      return chars(n.chars);
    case K::Concat: {
      ReP out = eps();
      for (const auto& c : n.children) out = seq(out, translate(c));
      return out;
    }
    case K::Repeat: {
      ReP child = translate(n.children.front());
      ReP tail;
      if (!n.max) {
        tail = star(child);
      } else {
        tail = eps();
        for (std::size_t i = n.min; i < *n.max; ++i) tail = alt(eps(), seq(child, tail));
      }
      ReP out = eps();
      for (std::size_t i = 0; i < n.min; ++i) out = seq(out, child);
      return seq(out, tail);
    }
  }
  return empty();
}

inline bool derivative_match(const pedteach::RegexAst& ast, std::string_view text) {
  ReP r = translate(ast.root);
  for (char c : text) {
    r = derive(r, static_cast<unsigned char>(c));
    if (r->kind == Re::Kind::Empty) return false;
  }
  return nullable(r);
}

/// Pre-translated form for tight loops.
class DerivativeMatcher {
 public:
  explicit DerivativeMatcher(const pedteach::RegexAst& ast) : root_(translate(ast.root)) {}

  bool operator()(std::string_view text) const {
    ReP r = root_;
    for (char c : text) {
      r = derive(r, static_cast<unsigned char>(c));
      if (r->kind == Re::Kind::Empty) return false;
    }
    return nullable(r);
  }

 private:
  ReP root_;
};

}  // namespace oracle
