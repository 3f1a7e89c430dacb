#pragma once

// Textual rule format, one rule per line:
//
//   # sigma: person p_id #"person0" name
//   q0(%t(x1)x2) -> out(q1(x0))
//   q0(eps) -> out(q1(x0))
//   q3(#"person0"(x1)x2, y1, y2) -> y1
//   q5(%text(x1)x2) -> %t() q5(x2)
//
// `q(%, y1) -> rhs` abbreviates the default rule plus the epsilon rule with
// the same right-hand side. The state of the first rule is initial.

#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "xqmft/forest.hpp"
#include "xqmft/mft.hpp"

namespace xqmft {

namespace detail {

inline bool is_var_word(std::string_view w, char prefix) {
  if (w.size() < 2 || w[0] != prefix) return false;
  for (std::size_t i = 1; i < w.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(w[i]))) return false;
  return true;
}

class RulePrinter {
 public:
  explicit RulePrinter(const Mft& m) : m_(m) {
    for (const StateInfo& s : m.states) names_.insert(s.name);
  }

  std::string label(const std::string& l) const {
    if (names_.count(l) || is_var_word(l, 'y') || is_var_word(l, 'x') || l == "@") return quote(l);
    return print_label(l);
  }

  void items(const Rhs& rhs, std::string& out, const char* sep) const {
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      if (i) out += sep;
      item(rhs[i], out);
    }
  }

  void arg(const Rhs& rhs, std::string& out) const {
    if (rhs.empty()) {
      out += "eps";
      return;
    }
    items(rhs, out, " ");
  }

  void item(const Item& it, std::string& out) const {
    if (auto* o = std::get_if<OutNode>(&it.v)) {
      if (o->copy_label) {
        out += "%t";
      } else if (o->kind == NodeKind::Text) {
        out += '#';
        out += quote(o->label);
        if (o->children.empty()) return;
      } else if (o->kind == NodeKind::Attribute) {
        out += '@';
        out += label(o->label);
      } else if (o->label == kConcatLabel) {
        out += '@';
      } else {
        out += label(o->label);
      }
      out += '(';
      items(o->children, out, o->children.size() == 2 ? ", " : " ");
      out += ')';
    } else if (auto* p = std::get_if<Param>(&it.v)) {
      out += 'y' + std::to_string(p->index);
    } else if (auto* c = std::get_if<Call>(&it.v)) {
      out += m_.states[c->state].name;
      out += "(x" + std::to_string(c->input);
      for (const Rhs& a : c->args) {
        out += ", ";
        arg(a, out);
      }
      out += ')';
    } else {
      out += "eps";
    }
  }

  std::string guard(const Guard& g) const {
    switch (g.kind) {
      case GuardKind::Symbol:
        return (g.symbol.text ? "#" + quote(g.symbol.label) : symbol_label(g.symbol.label)) +
               "(x1)x2";
      case GuardKind::Text: return "%text(x1)x2";
      case GuardKind::Default: return "%t(x1)x2";
      case GuardKind::Epsilon: return "eps";
    }
    return {};
  }

  static std::string symbol_label(const std::string& l) {
    return is_var_word(l, 'x') || is_var_word(l, 'y') ? quote(l) : print_label(l);
  }

  std::string rule(const Rule& r) const {
    std::string out = m_.states[r.state].name + "(" + guard(r.guard);
    for (int i = 1; i <= m_.params(r.state); ++i) out += ", y" + std::to_string(i);
    out += ") -> ";
    if (r.rhs.empty()) out += "eps";
    else items(r.rhs, out, " ");
    return out;
  }

 private:
  const Mft& m_;
  std::set<std::string> names_;
};

}  // namespace detail

inline std::string print_rhs(const Mft& m, const Rhs& rhs) {
  if (rhs.empty()) return "eps";
  std::string out;
  detail::RulePrinter(m).items(rhs, out, " ");
  return out;
}

inline std::string print_rule(const Mft& m, const Rule& r) {
  return detail::RulePrinter(m).rule(r);
}

inline std::string print_symbol(const Symbol& s) {
  return s.text ? "#" + detail::quote(s.label) : detail::RulePrinter::symbol_label(s.label);
}

/// Canonical form: sigma header, then rules grouped by state with the
/// initial state first; within a state symbol rules precede text, default
/// and epsilon rules.
inline std::string print_mft(const Mft& m) {
  detail::RulePrinter pr(m);
  std::string out = "# sigma:";
  for (const Symbol& s : m.sigma) out += " " + print_symbol(s);
  out += '\n';
  std::vector<int> order{m.initial};
  for (int q = 0; q < static_cast<int>(m.states.size()); ++q)
    if (q != m.initial) order.push_back(q);
  std::vector<std::vector<const Rule*>> by_state(m.states.size());
  for (const Rule& r : m.rules) by_state[r.state].push_back(&r);
  for (int q : order) {
    auto rules = by_state[q];
    std::stable_sort(rules.begin(), rules.end(), [](const Rule* a, const Rule* b) {
      if (a->guard.kind != b->guard.kind) return a->guard.kind < b->guard.kind;
      return a->guard.symbol < b->guard.symbol;
    });
    for (const Rule* r : rules) out += pr.rule(*r) + '\n';
  }
  return out;
}

namespace detail {

class RuleParser {
 public:
  explicit RuleParser(std::string_view text) : text_(text) {}

  Mft parse() {
    split_lines();
    collect_states();
    for (const auto& [line, no] : rules_) parse_rule(line, no);
    if (m_.states.empty()) throw SyntaxError("no rules", 1, 1);
    m_.initial = 0;
    return std::move(m_);
  }

 private:
  void split_lines() {
    std::size_t no = 0;
    std::size_t pos = 0;
    while (pos <= text_.size()) {
      std::size_t nl = text_.find('\n', pos);
      if (nl == std::string_view::npos) nl = text_.size();
      std::string_view line = text_.substr(pos, nl - pos);
      ++no;
      pos = nl + 1;
      std::size_t b = line.find_first_not_of(" \t\r");
      if (b == std::string_view::npos) continue;
      line = line.substr(b);
      if (line.substr(0, 7) == "# sigma" || line.substr(0, 6) == "#sigma") {
        std::size_t colon = line.find(':');
        if (colon == std::string_view::npos) throw SyntaxError("expected ':' after sigma", no, 1);
        parse_sigma(line.substr(colon + 1), no);
        continue;
      }
      if (line[0] == '#') continue;
      rules_.emplace_back(std::string(line), no);
    }
  }

  void parse_sigma(std::string_view s, std::size_t no) {
    TermLexer lx(s, no);
    while (lx.kind() != Tok::End) {
      if (lx.accept(Tok::Hash)) {
        if (lx.kind() != Tok::Quoted) lx.fail("expected quoted text symbol");
        m_.sigma.insert(text_symbol(lx.text()));
        lx.advance();
      } else {
        m_.sigma.insert(name_symbol(read_label(lx)));
      }
    }
  }

  void collect_states() {
    for (const auto& [line, no] : rules_) {
      TermLexer lx(line, no);
      if (lx.kind() != Tok::Word) lx.fail("expected state name");
      std::string name = lx.text();
      lx.advance();
      lx.expect(Tok::LParen, "'(' after state name");
      // Skip the guard, then count parameters.
      int depth = 1;
      int params = 0;
      while (depth > 0) {
        if (lx.kind() == Tok::End) lx.fail("unbalanced parentheses in left-hand side");
        if (lx.kind() == Tok::LParen) ++depth;
        if (lx.kind() == Tok::RParen) --depth;
        if (lx.kind() == Tok::Comma && depth == 1) ++params;
        lx.advance();
      }
      auto it = index_.find(name);
      if (it == index_.end()) {
        index_.emplace(name, m_.add_state(name, params + 1));
      } else if (m_.states[it->second].rank != params + 1) {
        throw SyntaxError("state " + name + " used with inconsistent rank", no, 1);
      }
    }
  }

  void parse_rule(const std::string& line, std::size_t no) {
    TermLexer lx(line, no);
    int q = index_.at(lx.text());
    lx.advance();
    lx.expect(Tok::LParen, "'('");
    std::vector<Guard> guards;
    if (lx.at_word("eps")) {
      lx.advance();
      guards.push_back(Guard::eps());
    } else if (lx.accept(Tok::Percent)) {
      if (lx.kind() == Tok::Comma || lx.kind() == Tok::RParen) {
        guards = {Guard::any(), Guard::eps()};
      } else {
        if (lx.at_word("t")) guards.push_back(Guard::any());
        else if (lx.at_word("text")) guards.push_back(Guard::text_node());
        else lx.fail("expected %t or %text");
        lx.advance();
        pattern_vars(lx);
      }
    } else if (lx.accept(Tok::Hash)) {
      if (lx.kind() != Tok::Quoted) lx.fail("expected quoted text symbol");
      guards.push_back(Guard::on(text_symbol(lx.text())));
      lx.advance();
      pattern_vars(lx);
    } else {
      lx.accept(Tok::At);
      guards.push_back(Guard::on(name_symbol(read_label(lx))));
      pattern_vars(lx);
    }
    for (int i = 1; i <= m_.params(q); ++i) {
      lx.expect(Tok::Comma, "','");
      if (!lx.at_word("y" + std::to_string(i))) lx.fail("expected y" + std::to_string(i));
      lx.advance();
    }
    lx.expect(Tok::RParen, "')'");
    lx.expect(Tok::Arrow, "'->'");
    Rhs rhs = top_rhs(lx, q);
    if (lx.kind() != Tok::End) lx.fail("unexpected token in right-hand side");
    for (const Guard& g : guards) m_.add_rule(q, g, rhs);
  }

  void pattern_vars(TermLexer& lx) {
    lx.expect(Tok::LParen, "'(x1'");
    if (!lx.at_word("x1")) lx.fail("expected x1");
    lx.advance();
    lx.expect(Tok::RParen, "')'");
    if (!lx.at_word("x2")) lx.fail("expected x2");
    lx.advance();
  }

  Rhs top_rhs(TermLexer& lx, int q) {
    if (lx.at_word("eps") && single_eps(lx)) {
      lx.advance();
      return {};
    }
    return items(lx, q, false);
  }

  // True when the current `eps` token is the whole rhs or argument.
  static bool single_eps(TermLexer& lx) {
    TermLexer probe = lx;
    probe.advance();
    return probe.kind() == Tok::End || probe.kind() == Tok::Comma || probe.kind() == Tok::RParen;
  }

  Rhs items(TermLexer& lx, int q, bool in_node) {
    Rhs out;
    while (true) {
      if (in_node && lx.accept(Tok::Comma)) continue;
      Tok k = lx.kind();
      if (k == Tok::End || k == Tok::RParen || k == Tok::Comma) return out;
      out.push_back(item(lx, q));
    }
  }

  Rhs node_children(TermLexer& lx, int q) {
    lx.expect(Tok::LParen, "'('");
    Rhs c = items(lx, q, true);
    lx.expect(Tok::RParen, "')'");
    return c;
  }

  Item item(TermLexer& lx, int q) {
    if (lx.accept(Tok::Percent)) {
      if (!lx.at_word("t")) lx.fail("expected %t");
      lx.advance();
      return copy_node(node_children(lx, q));
    }
    if (lx.accept(Tok::Hash)) {
      if (lx.kind() != Tok::Quoted) lx.fail("expected quoted text");
      std::string s = lx.text();
      lx.advance();
      Rhs c;
      if (lx.kind() == Tok::LParen) c = node_children(lx, q);
      return out_text(std::move(s), std::move(c));
    }
    if (lx.accept(Tok::At)) {
      if (lx.kind() == Tok::LParen)
        return out(std::string(kConcatLabel), node_children(lx, q));
      std::string l = read_label(lx);
      return out(std::move(l), node_children(lx, q), NodeKind::Attribute);
    }
    if (lx.kind() == Tok::Quoted) {
      std::string l = lx.text();
      lx.advance();
      return out(std::move(l), node_children(lx, q));
    }
    if (lx.kind() != Tok::Word) lx.fail("expected right-hand side item");
    std::string w = lx.text();
    if (w == "eps") {
      lx.advance();
      return nil();
    }
    if (is_var_word(w, 'y')) {
      lx.advance();
      if (lx.kind() == Tok::LParen) return out(std::move(w), node_children(lx, q));
      int j = std::stoi(w.substr(1));
      if (j < 1 || j > m_.params(q)) lx.fail("parameter " + w + " out of range");
      return param(j);
    }
    if (auto it = index_.find(w); it != index_.end()) {
      lx.advance();
      lx.expect(Tok::LParen, "'(' after state name");
      if (lx.kind() != Tok::Word || !is_var_word(lx.text(), 'x') || lx.text().size() != 2 ||
          lx.text()[1] > '2')
        lx.fail("expected x0, x1 or x2 as first argument of " + w);
      int input = lx.text()[1] - '0';
      lx.advance();
      std::vector<Rhs> args;
      while (lx.accept(Tok::Comma)) {
        if (lx.at_word("eps") && single_eps(lx)) {
          lx.advance();
          args.emplace_back();
        } else {
          args.push_back(items(lx, q, false));
        }
      }
      lx.expect(Tok::RParen, "')'");
      if (static_cast<int>(args.size()) != m_.params(it->second))
        lx.fail("state " + w + " expects " + std::to_string(m_.params(it->second)) +
                " arguments");
      return call(it->second, input, std::move(args));
    }
    lx.advance();
    if (lx.kind() != Tok::LParen) lx.fail("unknown state or missing '(' after label " + w);
    return out(std::move(w), node_children(lx, q));
  }

  std::string_view text_;
  std::vector<std::pair<std::string, std::size_t>> rules_;
  std::map<std::string, int> index_;
  Mft m_;
};

}  // namespace detail

/// Parses the rule format. Throws SyntaxError with line and column.
/// Structural checks are left to validate().
inline Mft parse_mft(std::string_view text) { return detail::RuleParser(text).parse(); }

}  // namespace xqmft
