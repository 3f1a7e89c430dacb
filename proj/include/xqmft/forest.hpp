#pragma once

// XML forests, their first-child/next-sibling binary encoding, and the
// textual term notation used throughout the tools and tests.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xqmft {

enum class NodeKind : std::uint8_t { Element, Attribute, Text };

struct Tree;
using Forest = std::vector<Tree>;

/// One node of an unranked ordered tree. Text nodes carry their content as
/// the label and have no children; attribute nodes hold one text child.
struct Tree {
  std::string label;
  NodeKind kind = NodeKind::Element;
  Forest children;

  bool operator==(const Tree&) const = default;
};

inline Tree element(std::string label, Forest children = {}) {
  return Tree{std::move(label), NodeKind::Element, std::move(children)};
}

inline Tree text(std::string content) { return Tree{std::move(content), NodeKind::Text, {}}; }

inline Tree attribute(std::string name, std::string value) {
  return Tree{std::move(name), NodeKind::Attribute, {text(std::move(value))}};
}

inline std::size_t node_count(const Forest& f) {
  std::size_t n = 0;
  for (const Tree& t : f) n += 1 + node_count(t.children);
  return n;
}

inline std::size_t depth(const Forest& f) {
  std::size_t d = 0;
  for (const Tree& t : f) d = std::max(d, 1 + depth(t.children));
  return d;
}

/// Merges adjacent text siblings (recursively). Transducer outputs may place
/// text nodes next to each other; XML cannot.
inline Forest normalize(Forest f) {
  Forest out;
  out.reserve(f.size());
  for (Tree& t : f) {
    t.children = normalize(std::move(t.children));
    if (t.kind == NodeKind::Text && !out.empty() && out.back().kind == NodeKind::Text &&
        out.back().children.empty() && t.children.empty()) {
      out.back().label += t.label;
      continue;
    }
    out.push_back(std::move(t));
  }
  return out;
}

/// Checks the structural invariants of an input forest; returns an empty
/// string when they hold, otherwise a description of the first violation.
inline std::string check_forest(const Forest& f) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Tree& t = f[i];
    if (t.kind != NodeKind::Text && t.label.empty()) return "empty label";
    if (t.kind == NodeKind::Text) {
      if (!t.children.empty()) return "text node with children";
      if (i > 0 && f[i - 1].kind == NodeKind::Text) return "adjacent text nodes";
    }
    if (t.kind == NodeKind::Attribute &&
        (t.children.size() != 1 || t.children[0].kind != NodeKind::Text))
      return "attribute '" + t.label + "' must hold exactly one text node";
    if (auto why = check_forest(t.children); !why.empty()) return why;
  }
  return {};
}

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// ---------------------------------------------------------------------------
// Binary trees

struct BinaryNode;
/// nullptr is the leaf epsilon.
using BinaryTree = std::shared_ptr<const BinaryNode>;

struct BinaryNode {
  std::string label;
  NodeKind kind = NodeKind::Element;
  BinaryTree left;
  BinaryTree right;
};

/// Reserved label interpreted as forest concatenation by eval().
inline constexpr std::string_view kConcatLabel = "@";

inline BinaryTree binary(std::string label, NodeKind kind, BinaryTree left, BinaryTree right) {
  return std::make_shared<const BinaryNode>(
      BinaryNode{std::move(label), kind, std::move(left), std::move(right)});
}

inline BinaryTree concat(BinaryTree left, BinaryTree right) {
  return binary(std::string(kConcatLabel), NodeKind::Element, std::move(left), std::move(right));
}

inline bool is_concat(const BinaryNode& n) {
  return n.kind == NodeKind::Element && n.label == kConcatLabel;
}

inline bool equal(const BinaryTree& a, const BinaryTree& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return a->label == b->label && a->kind == b->kind && equal(a->left, b->left) &&
         equal(a->right, b->right);
}

/// Number of labelled (internal) nodes.
inline std::size_t node_count(const BinaryTree& b) {
  return b ? 1 + node_count(b->left) + node_count(b->right) : 0;
}

inline std::size_t leaf_count(const BinaryTree& b) {
  return b ? leaf_count(b->left) + leaf_count(b->right) : 1;
}

inline std::size_t height(const BinaryTree& b) {
  return b ? 1 + std::max(height(b->left), height(b->right)) : 0;
}

namespace detail {
inline BinaryTree fcns_from(const Forest& f, std::size_t i) {
  if (i >= f.size()) return nullptr;
  const Tree& t = f[i];
  return binary(t.label, t.kind, fcns_from(t.children, 0), fcns_from(f, i + 1));
}
}  // namespace detail

/// fcns(eps) = eps, fcns(s(f1) f2) = s(fcns(f1), fcns(f2)).
inline BinaryTree fcns(const Forest& f) { return detail::fcns_from(f, 0); }

inline Forest fcns_inverse(const BinaryTree& b) {
  Forest out;
  for (const BinaryNode* n = b.get(); n; n = n->right.get()) {
    if (is_concat(*n)) throw std::invalid_argument("fcns_inverse: '@' node in binary tree");
    out.push_back(Tree{n->label, n->kind, fcns_inverse(n->left)});
  }
  return out;
}

namespace detail {
inline void eval_into(const BinaryTree& b, Forest& out) {
  for (const BinaryNode* n = b.get(); n; n = n->right.get()) {
    if (is_concat(*n)) {
      eval_into(n->left, out);
    } else {
      Tree t{n->label, n->kind, {}};
      eval_into(n->left, t.children);
      out.push_back(std::move(t));
    }
  }
}
}  // namespace detail

/// Interprets '@' nodes as concatenation; every other node s(l, r) becomes
/// s(eval(l)) followed by eval(r).
inline Forest eval(const BinaryTree& b) {
  Forest out;
  detail::eval_into(b, out);
  return out;
}

// ---------------------------------------------------------------------------
// Term notation

namespace detail {

inline bool is_bare_char(char c) {
  switch (c) {
    case '(': case ')': case ',': case '"': case '#': case '@': case '%':
    case ' ': case '\t': case '\n': case '\r':
      return false;
    default:
      return true;
  }
}

inline bool needs_quotes(std::string_view label) {
  if (label.empty() || label == "eps") return true;
  for (char c : label)
    if (!is_bare_char(c)) return true;
  // "->" separates rule sides in the rule file format.
  return label.find("->") != std::string_view::npos;
}

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string print_label(std::string_view label) {
  return needs_quotes(label) ? quote(label) : std::string(label);
}

enum class Tok { End, LParen, RParen, Comma, Word, Quoted, Hash, At, Percent, Arrow };

/// Tokenizer shared by the term, binary-tree and rule-file parsers.
class TermLexer {
 public:
  explicit TermLexer(std::string_view src, std::size_t line = 1) : src_(src), line_(line) {
    advance();
  }

  Tok kind() const { return kind_; }
  const std::string& text() const { return text_; }
  std::size_t line() const { return tok_line_; }
  std::size_t column() const { return tok_col_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw SyntaxError(what, tok_line_, tok_col_);
  }

  void expect(Tok k, const char* what) {
    if (kind_ != k) fail(std::string("expected ") + what);
    advance();
  }

  bool accept(Tok k) {
    if (kind_ != k) return false;
    advance();
    return true;
  }

  bool at_word(std::string_view w) const { return kind_ == Tok::Word && text_ == w; }

  void advance() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\r' ||
                                  src_[pos_] == '\n')) {
      if (src_[pos_] == '\n') {
        ++line_;
        line_start_ = pos_ + 1;
      }
      ++pos_;
    }
    tok_line_ = line_;
    tok_col_ = pos_ - line_start_ + 1;
    text_.clear();
    if (pos_ >= src_.size()) {
      kind_ = Tok::End;
      return;
    }
    char c = src_[pos_];
    switch (c) {
      case '(': kind_ = Tok::LParen; ++pos_; return;
      case ')': kind_ = Tok::RParen; ++pos_; return;
      case ',': kind_ = Tok::Comma; ++pos_; return;
      case '#': kind_ = Tok::Hash; ++pos_; return;
      case '@': kind_ = Tok::At; ++pos_; return;
      case '%': kind_ = Tok::Percent; ++pos_; return;
      case '"': read_quoted(); return;
      default: break;
    }
    if (src_.substr(pos_, 2) == "->") {
      kind_ = Tok::Arrow;
      pos_ += 2;
      return;
    }
    kind_ = Tok::Word;
    while (pos_ < src_.size() && is_bare_char(src_[pos_]) && src_.substr(pos_, 2) != "->")
      text_ += src_[pos_++];
  }

  /// Raw remaining input, used by callers that need lookahead on characters.
  char peek_char() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

 private:
  void read_quoted() {
    ++pos_;
    kind_ = Tok::Quoted;
    while (true) {
      if (pos_ >= src_.size()) fail("unterminated quoted label");
      char c = src_[pos_++];
      if (c == '"') return;
      if (c == '\\') {
        if (pos_ >= src_.size()) fail("unterminated escape");
        c = src_[pos_++];
      }
      if (c == '\n') {
        ++line_;
        line_start_ = pos_;
      }
      text_ += c;
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_;
  std::size_t line_start_ = 0;
  std::size_t tok_line_ = 1;
  std::size_t tok_col_ = 1;
  Tok kind_ = Tok::End;
  std::string text_;
};

inline std::string read_label(TermLexer& lx) {
  if (lx.kind() != Tok::Word && lx.kind() != Tok::Quoted) lx.fail("expected label");
  std::string s = lx.text();
  lx.advance();
  return s;
}

inline Forest parse_forest_items(TermLexer& lx);

inline Tree parse_tree(TermLexer& lx) {
  Tree t;
  if (lx.accept(Tok::Hash)) {
    if (lx.kind() != Tok::Quoted) lx.fail("expected quoted text after '#'");
    t.kind = NodeKind::Text;
    t.label = lx.text();
    lx.advance();
    if (lx.accept(Tok::LParen)) {
      t.children = parse_forest_items(lx);
      lx.expect(Tok::RParen, "')'");
    }
    return t;
  }
  if (lx.accept(Tok::At)) t.kind = NodeKind::Attribute;
  if (lx.kind() == Tok::Word && lx.text() == "eps") lx.fail("'eps' is not a label; quote it");
  t.label = read_label(lx);
  lx.expect(Tok::LParen, "'('");
  t.children = parse_forest_items(lx);
  lx.expect(Tok::RParen, "')'");
  return t;
}

inline Forest parse_forest_items(TermLexer& lx) {
  Forest f;
  if (lx.at_word("eps")) {
    lx.advance();
    return f;
  }
  while (lx.kind() == Tok::Word || lx.kind() == Tok::Quoted || lx.kind() == Tok::Hash ||
         lx.kind() == Tok::At)
    f.push_back(parse_tree(lx));
  return f;
}

inline void print_tree(const Tree& t, std::string& out);

inline void print_items(const Forest& f, std::string& out) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) out += ' ';
    print_tree(f[i], out);
  }
}

inline void print_tree(const Tree& t, std::string& out) {
  if (t.kind == NodeKind::Text) {
    out += '#';
    out += quote(t.label);
    if (t.children.empty()) return;
  } else {
    if (t.kind == NodeKind::Attribute) out += '@';
    out += print_label(t.label);
  }
  out += '(';
  print_items(t.children, out);
  out += ')';
}

}  // namespace detail

/// Parses term notation, e.g. `a(b() #"x") @id(#"1")`. The empty string and
/// `eps` both denote the empty forest.
inline Forest parse_term(std::string_view s) {
  detail::TermLexer lx(s);
  Forest f = detail::parse_forest_items(lx);
  if (lx.kind() != detail::Tok::End) lx.fail("unexpected token in term");
  return f;
}

inline std::string print_term(const Forest& f) {
  if (f.empty()) return "eps";
  std::string out;
  detail::print_items(f, out);
  return out;
}

namespace detail {
inline BinaryTree parse_binary_tree(TermLexer& lx) {
  if (lx.at_word("eps")) {
    lx.advance();
    return nullptr;
  }
  NodeKind kind = NodeKind::Element;
  std::string label;
  if (lx.accept(Tok::Hash)) {
    kind = NodeKind::Text;
    if (lx.kind() != Tok::Quoted) lx.fail("expected quoted text after '#'");
    label = lx.text();
    lx.advance();
  } else if (lx.accept(Tok::At)) {
    if (lx.kind() == Tok::LParen) {
      label = std::string(kConcatLabel);
    } else {
      kind = NodeKind::Attribute;
      label = read_label(lx);
    }
  } else {
    label = read_label(lx);
  }
  lx.expect(Tok::LParen, "'('");
  BinaryTree l = parse_binary_tree(lx);
  lx.expect(Tok::Comma, "','");
  BinaryTree r = parse_binary_tree(lx);
  lx.expect(Tok::RParen, "')'");
  return binary(std::move(label), kind, std::move(l), std::move(r));
}

inline void print_binary_into(const BinaryTree& b, std::string& out) {
  if (!b) {
    out += "eps";
    return;
  }
  if (b->kind == NodeKind::Text) {
    out += '#';
    out += quote(b->label);
  } else if (is_concat(*b)) {
    out += '@';
  } else {
    if (b->kind == NodeKind::Attribute) out += '@';
    out += print_label(b->label);
  }
  out += '(';
  print_binary_into(b->left, out);
  out += ", ";
  print_binary_into(b->right, out);
  out += ')';
}
}  // namespace detail

/// Binary trees print as `a(b(eps, eps), eps)`; `@(l, r)` is concatenation.
inline BinaryTree parse_binary(std::string_view s) {
  detail::TermLexer lx(s);
  BinaryTree b = detail::parse_binary_tree(lx);
  if (lx.kind() != detail::Tok::End) lx.fail("unexpected token in binary tree");
  return b;
}

inline std::string print_binary(const BinaryTree& b) {
  std::string out;
  detail::print_binary_into(b, out);
  return out;
}

}  // namespace xqmft
