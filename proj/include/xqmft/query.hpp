#pragma once

// MinXQuery: abstract syntax, parser, scoping rules, size and printer.

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "xqmft/forest.hpp"

namespace xqmft {

enum class Axis : std::uint8_t { Child, Descendant, FollowingSibling };

struct NodeTest {
  enum class Kind : std::uint8_t { Name, Star, Text, Node } kind = Kind::Name;
  std::string name;
  bool operator==(const NodeTest&) const = default;
};

struct Predicate;

struct Step {
  Axis axis = Axis::Child;
  NodeTest test;
  std::vector<Predicate> preds;
  bool operator==(const Step&) const = default;
};

struct Predicate {
  enum class Kind : std::uint8_t { Exists, Empty, Eq, Neq } kind = Kind::Exists;
  std::vector<Step> path;  // relative to "."
  std::string value;       // for Eq and Neq
  bool operator==(const Predicate&) const = default;
};

struct Path {
  std::string var;  // without the leading '$'
  std::vector<Step> steps;
  bool operator==(const Path&) const = default;
};

/// Source position; ignored by equality so that printed and reparsed
/// queries compare equal.
struct SourcePos {
  std::size_t line = 0;
  std::size_t column = 0;
  bool operator==(const SourcePos&) const { return true; }
};

struct Query {
  enum class Kind : std::uint8_t { Element, Text, For, Let, PathExpr, Sequence };
  Kind kind = Kind::Sequence;
  /// Element name, text content, or bound variable of for/let.
  std::string name;
  /// Iteration path of For, or the path of PathExpr.
  Path path;
  /// Element content; For: {body}; Let: {bound, body}; Sequence items.
  std::vector<Query> children;
  SourcePos pos;

  bool operator==(const Query&) const = default;
};

inline const std::string kInputVar = "input";

namespace detail {

class QueryParser {
 public:
  explicit QueryParser(std::string_view src) : src_(src) {}

  Query parse() {
    Query q = query();
    skip_ws();
    if (pos_ < src_.size()) fail("unexpected input after query");
    return q;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SyntaxError(what, line, col);
  }

  SourcePos here() const {
    SourcePos p{1, 1};
    for (std::size_t i = 0; i < pos_; ++i) {
      if (src_[i] == '\n') {
        ++p.line;
        p.column = 1;
      } else {
        ++p.column;
      }
    }
    return p;
  }

  char peek(std::size_t k = 0) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else if (c == '(' && peek(1) == ':') {
        std::size_t end = src_.find(":)", pos_ + 2);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 2;
      } else {
        return;
      }
    }
  }

  static bool name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
           static_cast<unsigned char>(c) > 0x7f;
  }
  static bool name_char(char c) {
    return name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.';
  }

  std::string name() {
    if (!name_start(peek())) fail("expected a name");
    std::size_t b = pos_;
    while (name_char(peek())) ++pos_;
    return std::string(src_.substr(b, pos_ - b));
  }

  bool at_keyword(std::string_view kw) {
    skip_ws();
    if (src_.substr(pos_, kw.size()) != kw) return false;
    return !name_char(peek(kw.size()));
  }

  void keyword(std::string_view kw) {
    if (!at_keyword(kw)) fail("expected '" + std::string(kw) + "'");
    pos_ += kw.size();
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (src_.substr(pos_, tok.size()) != tok) return false;
    pos_ += tok.size();
    return true;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }

  std::string variable() {
    skip_ws();
    if (peek() != '$') fail("expected a variable");
    ++pos_;
    return name();
  }

  std::string string_literal() {
    skip_ws();
    char q = peek();
    if (q != '"' && q != '\'') fail("expected a string literal");
    ++pos_;
    std::size_t end = src_.find(q, pos_);
    if (end == std::string_view::npos) fail("unterminated string literal");
    std::string s(src_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }

  // query ::= item (',' item)*  -- a comma list becomes a Sequence.
  Query query() {
    skip_ws();
    SourcePos p = here();
    Query first = item();
    if (!at_comma()) return first;
    Query seq;
    seq.kind = Query::Kind::Sequence;
    seq.pos = p;
    seq.children.push_back(std::move(first));
    while (accept(",")) seq.children.push_back(item());
    return seq;
  }

  bool at_comma() {
    skip_ws();
    return peek() == ',';
  }

  Query item() {
    skip_ws();
    SourcePos p = here();
    if (peek() == '<') return element();
    if (at_keyword("where")) fail("where-clauses are not supported; use a path predicate");
    if (at_keyword("for")) {
      keyword("for");
      Query q;
      q.kind = Query::Kind::For;
      q.pos = p;
      q.name = variable();
      keyword("in");
      q.path = ordpath();
      if (at_keyword("where")) fail("where-clauses are not supported; use a path predicate");
      keyword("return");
      q.children.push_back(item());
      return q;
    }
    if (at_keyword("let")) {
      keyword("let");
      Query q;
      q.kind = Query::Kind::Let;
      q.pos = p;
      q.name = variable();
      expect(":=");
      q.children.push_back(item());
      keyword("return");
      q.children.push_back(item());
      return q;
    }
    if (peek() == '(') {
      ++pos_;
      Query q = query();
      expect(")");
      return q;
    }
    if (peek() == '$' || peek() == '/') {
      Query q;
      q.kind = Query::Kind::PathExpr;
      q.pos = p;
      q.path = ordpath();
      return q;
    }
    fail("expected a query");
  }

  Query element() {
    SourcePos p = here();
    expect("<");
    Query q;
    q.kind = Query::Kind::Element;
    q.pos = p;
    q.name = name();
    skip_ws();
    if (accept("/>")) return q;
    expect(">");
    while (true) {
      std::size_t b = pos_;
      while (pos_ < src_.size() && src_[pos_] != '<' && src_[pos_] != '{') ++pos_;
      std::string_view raw = src_.substr(b, pos_ - b);
      std::size_t s = raw.find_first_not_of(" \t\r\n");
      if (s != std::string_view::npos) {
        std::size_t e = raw.find_last_not_of(" \t\r\n");
        Query t;
        t.kind = Query::Kind::Text;
        t.name = std::string(raw.substr(s, e - s + 1));
        q.children.push_back(std::move(t));
      }
      if (pos_ >= src_.size()) fail("unterminated element <" + q.name + ">");
      if (src_[pos_] == '{') {
        ++pos_;
        q.children.push_back(query());
        expect("}");
        continue;
      }
      if (peek(1) == '/') {
        pos_ += 2;
        std::string closing = name();
        if (closing != q.name)
          fail("closing tag </" + closing + "> does not match <" + q.name + ">");
        expect(">");
        return q;
      }
      q.children.push_back(element());
    }
  }

  Path ordpath() {
    skip_ws();
    Path path;
    if (peek() == '$') {
      path.var = variable();
    } else if (peek() == '/') {
      path.var = kInputVar;
    } else {
      fail("expected a path");
    }
    path.steps = steps();
    return path;
  }

  std::vector<Step> steps() {
    std::vector<Step> out;
    while (true) {
      skip_ws();
      if (peek() != '/') return out;
      ++pos_;
      Step s;
      if (peek() == '/') {
        ++pos_;
        s.axis = Axis::Descendant;
        s.test = node_test();
      } else {
        step_body(s);
      }
      s.preds = predicates();
      out.push_back(std::move(s));
    }
  }

  void step_body(Step& s) {
    skip_ws();
    std::size_t save = pos_;
    if (name_start(peek())) {
      std::string w = name();
      if (accept("::")) {
        if (w == "child") s.axis = Axis::Child;
        else if (w == "descendant") s.axis = Axis::Descendant;
        else if (w == "following-sibling") s.axis = Axis::FollowingSibling;
        else fail("unsupported axis '" + w + "'");
        s.test = node_test();
        return;
      }
    }
    pos_ = save;
    s.axis = Axis::Child;
    s.test = node_test();
  }

  NodeTest node_test() {
    skip_ws();
    NodeTest t;
    if (accept("*")) {
      t.kind = NodeTest::Kind::Star;
      return t;
    }
    std::string w = name();
    std::size_t save = pos_;
    skip_ws();
    if ((w == "text" || w == "node") && peek() == '(') {
      ++pos_;
      expect(")");
      t.kind = w == "text" ? NodeTest::Kind::Text : NodeTest::Kind::Node;
      return t;
    }
    pos_ = save;
    t.kind = NodeTest::Kind::Name;
    t.name = std::move(w);
    return t;
  }

  std::vector<Predicate> predicates() {
    std::vector<Predicate> out;
    while (accept("[")) {
      Predicate p;
      if (at_keyword("empty")) {
        keyword("empty");
        expect("(");
        p.kind = Predicate::Kind::Empty;
        p.path = predpath();
        expect(")");
      } else {
        p.path = predpath();
        if (accept("!=")) {
          p.kind = Predicate::Kind::Neq;
          p.value = string_literal();
        } else if (accept("=")) {
          p.kind = Predicate::Kind::Eq;
          p.value = string_literal();
        }
      }
      expect("]");
      out.push_back(std::move(p));
    }
    return out;
  }

  std::vector<Step> predpath() {
    skip_ws();
    if (peek() == '.' && !name_char(peek(1))) {
      ++pos_;
      return steps();
    }
    // A relative path without the leading "./".
    std::vector<Step> out;
    Step s;
    step_body(s);
    s.preds = predicates();
    out.push_back(std::move(s));
    for (Step& t : steps()) out.push_back(std::move(t));
    return out;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses MinXQuery. `/a` abbreviates `/child::a`, `//a` abbreviates
/// `/descendant::a`, and a path starting with `/` starts at `$input`.
inline Query parse_query(std::string_view text) { return detail::QueryParser(text).parse(); }

// ---------------------------------------------------------------------------
// Scoping

struct Diagnostic {
  SourcePos pos;
  std::string message;
};

inline std::string format_diagnostic(const std::string& file, const Diagnostic& d) {
  return file + ":" + std::to_string(d.pos.line) + ":" + std::to_string(d.pos.column) + ": " +
         d.message;
}

namespace detail {
inline void check_scoping(const Query& q, const std::string& nearest_for,
                          std::vector<std::string>& bound, std::vector<Diagnostic>& out) {
  auto check_path = [&](const Path& p) {
    if (p.steps.empty()) return;
    if (p.var != nearest_for) {
      out.push_back({q.pos, "path starts at $" + p.var + ", but must start at $" + nearest_for +
                                (nearest_for == kInputVar ? "" : " (the nearest enclosing for)")});
    }
  };
  switch (q.kind) {
    case Query::Kind::Element:
    case Query::Kind::Sequence:
      for (const Query& c : q.children) check_scoping(c, nearest_for, bound, out);
      break;
    case Query::Kind::Text:
      break;
    case Query::Kind::PathExpr:
      if (q.path.steps.empty()) {
        if (std::find(bound.begin(), bound.end(), q.path.var) == bound.end())
          out.push_back({q.pos, "unbound variable $" + q.path.var});
      } else {
        check_path(q.path);
      }
      break;
    case Query::Kind::For:
      if (q.path.steps.empty())
        out.push_back({q.pos, "for clause needs a path with at least one step"});
      check_path(q.path);
      bound.push_back(q.name);
      check_scoping(q.children[0], q.name, bound, out);
      bound.pop_back();
      break;
    case Query::Kind::Let:
      check_scoping(q.children[0], nearest_for, bound, out);
      bound.push_back(q.name);
      check_scoping(q.children[1], nearest_for, bound, out);
      bound.pop_back();
      break;
  }
}
}  // namespace detail

/// Empty iff only $input is free and every path starts at the variable of
/// the nearest enclosing for clause (or $input outside of any for).
inline std::vector<Diagnostic> check_scoping(const Query& q) {
  std::vector<Diagnostic> out;
  std::vector<std::string> bound{kInputVar};
  detail::check_scoping(q, kInputVar, bound, out);
  return out;
}

// ---------------------------------------------------------------------------
// Size

inline std::size_t path_size(const std::vector<Step>& steps);

inline std::size_t step_size(const Step& s) {
  std::size_t n = 1;
  for (const Predicate& p : s.preds) n += 1 + path_size(p.path);
  return n;
}

inline std::size_t path_size(const std::vector<Step>& steps) {
  std::size_t n = 0;
  for (const Step& s : steps) n += step_size(s);
  return n;
}

/// Parse-tree node count: one node per query construct, one per path, one
/// per step and one per predicate.
inline std::size_t query_size(const Query& q) {
  std::size_t n = 1;
  if (q.kind == Query::Kind::For || q.kind == Query::Kind::PathExpr)
    n += 1 + path_size(q.path.steps);
  for (const Query& c : q.children) n += query_size(c);
  return n;
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {
inline void print_steps(const std::vector<Step>& steps, std::string& out);

inline void print_predicate(const Predicate& p, std::string& out) {
  out += '[';
  if (p.kind == Predicate::Kind::Empty) out += "empty(";
  out += '.';
  print_steps(p.path, out);
  if (p.kind == Predicate::Kind::Empty) out += ')';
  if (p.kind == Predicate::Kind::Eq) out += " = \"" + p.value + "\"";
  if (p.kind == Predicate::Kind::Neq) out += " != \"" + p.value + "\"";
  out += ']';
}

inline void print_steps(const std::vector<Step>& steps, std::string& out) {
  for (const Step& s : steps) {
    out += '/';
    switch (s.axis) {
      case Axis::Child: out += "child::"; break;
      case Axis::Descendant: out += "descendant::"; break;
      case Axis::FollowingSibling: out += "following-sibling::"; break;
    }
    switch (s.test.kind) {
      case NodeTest::Kind::Name: out += s.test.name; break;
      case NodeTest::Kind::Star: out += '*'; break;
      case NodeTest::Kind::Text: out += "text()"; break;
      case NodeTest::Kind::Node: out += "node()"; break;
    }
    for (const Predicate& p : s.preds) print_predicate(p, out);
  }
}

inline void print_query(const Query& q, std::string& out) {
  auto braced = [&](const Query& c) {
    if (c.kind == Query::Kind::Element || c.kind == Query::Kind::Text) {
      print_query(c, out);
    } else {
      out += '{';
      print_query(c, out);
      out += '}';
    }
  };
  switch (q.kind) {
    case Query::Kind::Element:
      out += '<' + q.name + '>';
      for (const Query& c : q.children) braced(c);
      out += "</" + q.name + '>';
      break;
    case Query::Kind::Text:
      out += q.name;
      break;
    case Query::Kind::Sequence:
      out += '(';
      for (std::size_t i = 0; i < q.children.size(); ++i) {
        if (i) out += ", ";
        print_query(q.children[i], out);
      }
      out += ')';
      break;
    case Query::Kind::PathExpr:
      out += '$' + q.path.var;
      print_steps(q.path.steps, out);
      break;
    case Query::Kind::For:
      out += "for $" + q.name + " in $" + q.path.var;
      print_steps(q.path.steps, out);
      out += " return ";
      print_query(q.children[0], out);
      break;
    case Query::Kind::Let:
      out += "let $" + q.name + " := ";
      print_query(q.children[0], out);
      out += " return ";
      print_query(q.children[1], out);
      break;
  }
}
}  // namespace detail

/// Prints the unabbreviated form; parse_query(print_query(q)) == q.
inline std::string print_query(const Query& q) {
  std::string out;
  detail::print_query(q, out);
  return out;
}

inline std::string print_path(const Path& p) {
  std::string out = "$" + p.var;
  detail::print_steps(p.steps, out);
  return out;
}

}  // namespace xqmft
