#pragma once

// Macro forest transducers: representation, validation, size and
// classification.

#include <algorithm>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "xqmft/forest.hpp"

namespace xqmft {

/// A guard label. Name symbols match element and attribute nodes carrying
/// the label; text symbols match text nodes whose content equals the label.
struct Symbol {
  bool text = false;
  std::string label;

  auto operator<=>(const Symbol&) const = default;
  bool operator==(const Symbol&) const = default;
};

inline Symbol name_symbol(std::string label) { return Symbol{false, std::move(label)}; }
inline Symbol text_symbol(std::string content) { return Symbol{true, std::move(content)}; }

/// The symbol a node would be matched against.
inline Symbol symbol_of(NodeKind kind, const std::string& label) {
  return Symbol{kind == NodeKind::Text, label};
}

enum class GuardKind : std::uint8_t { Symbol, Text, Default, Epsilon };

struct Guard {
  GuardKind kind = GuardKind::Default;
  Symbol symbol;  // only for GuardKind::Symbol

  static Guard on(Symbol s) { return Guard{GuardKind::Symbol, std::move(s)}; }
  static Guard text_node() { return Guard{GuardKind::Text, {}}; }
  static Guard any() { return Guard{GuardKind::Default, {}}; }
  static Guard eps() { return Guard{GuardKind::Epsilon, {}}; }

  bool operator==(const Guard&) const = default;
};

struct Item;
using Rhs = std::vector<Item>;

/// Output node. With copy_label set the node takes label and kind of the
/// current input node (the `%t` output of default and text rules).
struct OutNode {
  NodeKind kind = NodeKind::Element;
  std::string label;
  bool copy_label = false;
  Rhs children;
  bool operator==(const OutNode&) const = default;
};

struct Param {
  int index = 1;  // 1-based: y1, y2, ...
  bool operator==(const Param&) const = default;
};

struct Call {
  int state = 0;
  int input = 0;  // 0, 1 or 2 for x0, x1, x2
  std::vector<Rhs> args;
  bool operator==(const Call&) const = default;
};

/// The binary leaf epsilon. In forest semantics it denotes the empty forest;
/// it exists so that tree-shaped right-hand sides can name empty subtrees.
struct Nil {
  bool operator==(const Nil&) const = default;
};

struct Item {
  std::variant<OutNode, Param, Call, Nil> v;
  bool operator==(const Item&) const = default;
};

inline Item out(std::string label, Rhs children = {}, NodeKind kind = NodeKind::Element) {
  return Item{OutNode{kind, std::move(label), false, std::move(children)}};
}
inline Item out_text(std::string content, Rhs children = {}) {
  return Item{OutNode{NodeKind::Text, std::move(content), false, std::move(children)}};
}
inline Item copy_node(Rhs children = {}) {
  return Item{OutNode{NodeKind::Element, {}, true, std::move(children)}};
}
inline Item param(int index) { return Item{Param{index}}; }
inline Item call(int state, int input, std::vector<Rhs> args = {}) {
  return Item{Call{state, input, std::move(args)}};
}
inline Item nil() { return Item{Nil{}}; }

struct StateInfo {
  std::string name;
  int rank = 1;
  bool operator==(const StateInfo&) const = default;
};

struct Rule {
  int state = 0;
  Guard guard;
  Rhs rhs;
  bool operator==(const Rule&) const = default;
};

struct Mft {
  std::vector<StateInfo> states;
  int initial = 0;
  std::set<Symbol> sigma;
  std::vector<Rule> rules;

  bool operator==(const Mft&) const = default;

  int add_state(std::string name, int rank) {
    states.push_back({std::move(name), rank});
    return static_cast<int>(states.size()) - 1;
  }
  void add_rule(int state, Guard g, Rhs rhs) {
    if (g.kind == GuardKind::Symbol) sigma.insert(g.symbol);
    rules.push_back({state, std::move(g), std::move(rhs)});
  }
  /// Adds the default and epsilon rules of the `q(%, ...) -> rhs` shorthand.
  void add_any_rule(int state, const Rhs& rhs) {
    add_rule(state, Guard::any(), rhs);
    add_rule(state, Guard::eps(), rhs);
  }
  int rank(int q) const { return states.at(q).rank; }
  int params(int q) const { return states.at(q).rank - 1; }
  std::optional<int> find_state(const std::string& name) const {
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i].name == name) return static_cast<int>(i);
    return std::nullopt;
  }
};

/// Per-state rule lookup tables.
class RuleIndex {
 public:
  explicit RuleIndex(const Mft& m) : per_state_(m.states.size()) {
    for (std::size_t i = 0; i < m.rules.size(); ++i) {
      const Rule& r = m.rules[i];
      if (r.state < 0 || static_cast<std::size_t>(r.state) >= per_state_.size()) continue;
      Entry& e = per_state_[r.state];
      int idx = static_cast<int>(i);
      switch (r.guard.kind) {
        case GuardKind::Symbol:
          (r.guard.symbol.text ? e.texts : e.names).emplace(r.guard.symbol.label, idx);
          break;
        case GuardKind::Text: e.text = idx; break;
        case GuardKind::Default: e.fallback = idx; break;
        case GuardKind::Epsilon: e.eps = idx; break;
      }
    }
  }

  /// Rule applicable to a head node, or -1.
  int lookup(int state, NodeKind kind, const std::string& label) const {
    const Entry& e = per_state_[state];
    if (kind == NodeKind::Text) {
      if (auto it = e.texts.find(label); it != e.texts.end()) return it->second;
      if (e.text >= 0) return e.text;
    } else if (auto it = e.names.find(label); it != e.names.end()) {
      return it->second;
    }
    return e.fallback;
  }
  /// Rule for a symbol that is known statically.
  int lookup(int state, const Symbol& s) const {
    return lookup(state, s.text ? NodeKind::Text : NodeKind::Element, s.label);
  }
  int eps(int state) const { return per_state_[state].eps; }
  int fallback(int state) const { return per_state_[state].fallback; }
  int text(int state) const { return per_state_[state].text; }
  int exact(int state, const Symbol& s) const {
    const auto& table = s.text ? per_state_[state].texts : per_state_[state].names;
    auto it = table.find(s.label);
    return it == table.end() ? -1 : it->second;
  }

 private:
  struct Entry {
    std::unordered_map<std::string, int> names;
    std::unordered_map<std::string, int> texts;
    int text = -1;
    int fallback = -1;
    int eps = -1;
  };
  std::vector<Entry> per_state_;
};

// ---------------------------------------------------------------------------
// Traversals

template <class F>
void for_each_item(const Rhs& rhs, F&& f) {
  for (const Item& it : rhs) {
    f(it);
    if (auto* o = std::get_if<OutNode>(&it.v)) {
      for_each_item(o->children, f);
    } else if (auto* c = std::get_if<Call>(&it.v)) {
      for (const Rhs& a : c->args) for_each_item(a, f);
    }
  }
}

template <class F>
void for_each_item_mut(Rhs& rhs, F&& f) {
  for (Item& it : rhs) {
    f(it);
    if (auto* o = std::get_if<OutNode>(&it.v)) {
      for_each_item_mut(o->children, f);
    } else if (auto* c = std::get_if<Call>(&it.v)) {
      for (Rhs& a : c->args) for_each_item_mut(a, f);
    }
  }
}

inline bool uses_input(const Rhs& rhs, int input) {
  bool found = false;
  for_each_item(rhs, [&](const Item& it) {
    if (auto* c = std::get_if<Call>(&it.v); c && c->input == input) found = true;
  });
  return found;
}

inline bool uses_copy_label(const Rhs& rhs) {
  bool found = false;
  for_each_item(rhs, [&](const Item& it) {
    if (auto* o = std::get_if<OutNode>(&it.v); o && o->copy_label) found = true;
  });
  return found;
}

inline bool uses_param(const Rhs& rhs) {
  bool found = false;
  for_each_item(rhs, [&](const Item& it) {
    if (std::holds_alternative<Param>(it.v)) found = true;
  });
  return found;
}

/// Ground right-hand sides contain no calls and no parameters.
inline bool is_ground(const Rhs& rhs) {
  bool ground = true;
  for_each_item(rhs, [&](const Item& it) {
    if (std::holds_alternative<Call>(it.v) || std::holds_alternative<Param>(it.v)) ground = false;
  });
  return ground;
}

inline std::size_t rhs_size(const Rhs& rhs) {
  std::size_t n = 0;
  for (const Item& it : rhs) {
    if (auto* o = std::get_if<OutNode>(&it.v)) {
      n += 1 + rhs_size(o->children);
    } else if (auto* c = std::get_if<Call>(&it.v)) {
      n += 2;
      for (const Rhs& a : c->args) n += rhs_size(a);
    } else {
      n += 1;
    }
  }
  return n;
}

inline std::size_t lhs_size(const Mft& m, const Rule& r) {
  std::size_t params = static_cast<std::size_t>(m.params(r.state));
  return (r.guard.kind == GuardKind::Epsilon ? 2 : 4) + params;
}

/// |Sigma| plus the node counts of all left- and right-hand sides.
inline std::size_t size(const Mft& m) {
  std::size_t n = m.sigma.size();
  for (const Rule& r : m.rules) n += lhs_size(m, r) + rhs_size(r.rhs);
  return n;
}

inline std::size_t total_params(const Mft& m) {
  std::size_t n = 0;
  for (const StateInfo& s : m.states) n += static_cast<std::size_t>(s.rank - 1);
  return n;
}

// ---------------------------------------------------------------------------
// Validation

inline std::string describe(const Mft& m, const Rule& r) {
  std::string g;
  switch (r.guard.kind) {
    case GuardKind::Symbol: g = (r.guard.symbol.text ? "#\"" : "") + r.guard.symbol.label +
                                (r.guard.symbol.text ? "\"" : ""); break;
    case GuardKind::Text: g = "%text"; break;
    case GuardKind::Default: g = "%t"; break;
    case GuardKind::Epsilon: g = "eps"; break;
  }
  std::string q = (r.state >= 0 && static_cast<std::size_t>(r.state) < m.states.size())
                      ? m.states[r.state].name
                      : "#" + std::to_string(r.state);
  return q + "(" + g + ")";
}

namespace detail {
inline void validate_rhs(const Mft& m, const Rule& r, const Rhs& rhs,
                         std::vector<std::string>& out) {
  const std::string where = describe(m, r) + ": ";
  for (const Item& it : rhs) {
    if (auto* o = std::get_if<OutNode>(&it.v)) {
      if (o->copy_label && r.guard.kind == GuardKind::Epsilon)
        out.push_back(where + "%t output in an epsilon rule");
      if (!o->copy_label && o->kind != NodeKind::Text && o->label.empty())
        out.push_back(where + "empty output label");
      validate_rhs(m, r, o->children, out);
    } else if (auto* p = std::get_if<Param>(&it.v)) {
      if (p->index < 1 || p->index > m.params(r.state))
        out.push_back(where + "parameter y" + std::to_string(p->index) + " out of range");
    } else if (auto* c = std::get_if<Call>(&it.v)) {
      if (c->state < 0 || static_cast<std::size_t>(c->state) >= m.states.size()) {
        out.push_back(where + "call to unknown state");
        continue;
      }
      if (c->input < 0 || c->input > 2)
        out.push_back(where + "bad input variable x" + std::to_string(c->input));
      if (c->input != 0 && r.guard.kind == GuardKind::Epsilon)
        out.push_back(where + "x" + std::to_string(c->input) + " used in an epsilon rule");
      if (static_cast<int>(c->args.size()) != m.params(c->state))
        out.push_back(where + "call to " + m.states[c->state].name + " with " +
                      std::to_string(c->args.size()) + " arguments, expected " +
                      std::to_string(m.params(c->state)));
      for (const Rhs& a : c->args) validate_rhs(m, r, a, out);
    }
  }
}
}  // namespace detail

/// Returns one message per violated invariant; empty when m is well formed.
inline std::vector<std::string> validate(const Mft& m) {
  std::vector<std::string> out;
  if (m.states.empty()) {
    out.push_back("transducer has no states");
    return out;
  }
  if (m.initial < 0 || static_cast<std::size_t>(m.initial) >= m.states.size()) {
    out.push_back("initial state out of range");
    return out;
  }
  if (m.states[m.initial].rank != 1) out.push_back("initial state must have rank 1");
  std::set<std::string> names;
  for (const StateInfo& s : m.states) {
    if (s.rank < 1) out.push_back("state " + s.name + " has rank < 1");
    if (!names.insert(s.name).second) out.push_back("duplicate state name " + s.name);
  }
  std::vector<int> eps(m.states.size()), fallback(m.states.size()), textr(m.states.size());
  std::set<std::pair<int, Symbol>> seen;
  for (const Rule& r : m.rules) {
    if (r.state < 0 || static_cast<std::size_t>(r.state) >= m.states.size()) {
      out.push_back("rule for unknown state");
      continue;
    }
    switch (r.guard.kind) {
      case GuardKind::Symbol:
        if (!seen.insert({r.state, r.guard.symbol}).second)
          out.push_back(describe(m, r) + ": duplicate rule");
        if (!m.sigma.count(r.guard.symbol))
          out.push_back(describe(m, r) + ": guard symbol not in sigma");
        break;
      case GuardKind::Text:
        if (++textr[r.state] > 1) out.push_back(describe(m, r) + ": duplicate rule");
        break;
      case GuardKind::Default:
        if (++fallback[r.state] > 1) out.push_back(describe(m, r) + ": duplicate rule");
        break;
      case GuardKind::Epsilon:
        if (++eps[r.state] > 1) out.push_back(describe(m, r) + ": duplicate rule");
        break;
    }
    detail::validate_rhs(m, r, r.rhs, out);
  }
  for (std::size_t q = 0; q < m.states.size(); ++q) {
    if (eps[q] == 0) out.push_back("state " + m.states[q].name + " has no epsilon rule");
    if (fallback[q] == 0) out.push_back("state " + m.states[q].name + " has no default rule");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classification

enum class TransducerClass : std::uint8_t { TT, FT, MTT, MFT };

inline const char* to_string(TransducerClass c) {
  switch (c) {
    case TransducerClass::TT: return "TT";
    case TransducerClass::FT: return "FT";
    case TransducerClass::MTT: return "MTT";
    case TransducerClass::MFT: return "MFT";
  }
  return "?";
}

namespace detail {
inline bool tree_item(const Item& it);
/// A tree-shaped rhs is empty (the leaf epsilon) or a single tree.
inline bool tree_rhs(const Rhs& rhs) { return rhs.empty() || (rhs.size() == 1 && tree_item(rhs[0])); }
inline bool tree_item(const Item& it) {
  if (auto* o = std::get_if<OutNode>(&it.v))
    return o->children.size() == 2 && tree_item(o->children[0]) && tree_item(o->children[1]);
  if (auto* c = std::get_if<Call>(&it.v))
    return std::all_of(c->args.begin(), c->args.end(), [](const Rhs& a) { return tree_rhs(a); });
  return true;
}
}  // namespace detail

inline bool is_tree_shaped(const Mft& m) {
  return std::all_of(m.rules.begin(), m.rules.end(),
                     [](const Rule& r) { return detail::tree_rhs(r.rhs); });
}

inline bool is_parameter_free(const Mft& m) {
  return std::all_of(m.states.begin(), m.states.end(),
                     [](const StateInfo& s) { return s.rank == 1; });
}

/// Smallest of TT, FT, MTT, MFT whose syntactic restrictions m meets.
inline TransducerClass classify(const Mft& m) {
  bool tree = is_tree_shaped(m);
  bool flat = is_parameter_free(m);
  if (tree && flat) return TransducerClass::TT;
  if (flat) return TransducerClass::FT;
  if (tree) return TransducerClass::MTT;
  return TransducerClass::MFT;
}

}  // namespace xqmft
