#pragma once

// Deterministic automata for downward paths, and a direct recursive path
// evaluator used as reference.
//
// A state is a pair (C, D) of pending step indices. Steps in C may match the
// current node or any of its following siblings; steps in D may match any
// node of the current subtree region (it was opened by a descendant step of
// an ancestor). Reading a node yields a state for its children and a state
// for its following siblings, and tells whether the node is selected.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xqmft/forest.hpp"
#include "xqmft/query.hpp"

namespace xqmft {

/// Node test of an automaton step. TextEq/TextNeq compare text content and
/// only occur as the value step of a comparison predicate.
enum class TestKind : std::uint8_t { Name, Star, Text, Node, TextEq, TextNeq };

struct DStep {
  Axis axis = Axis::Child;
  TestKind test = TestKind::Node;
  std::string name;  // element name, or the compared string
  bool has_preds = false;
};

/// Label classes distinguished by an automaton: the named and text symbols
/// it tests, any other text node, and any other element or attribute.
struct LabelClass {
  enum class Kind : std::uint8_t { Name, TextSymbol, OtherText, OtherNode } kind;
  std::string label;
  auto operator<=>(const LabelClass&) const = default;
  bool operator==(const LabelClass&) const = default;
};

inline bool matches(const DStep& s, const LabelClass& c) {
  using K = LabelClass::Kind;
  switch (s.test) {
    case TestKind::Name: return c.kind == K::Name && c.label == s.name;
    case TestKind::Star: return c.kind == K::Name || c.kind == K::OtherNode;
    case TestKind::Text: return c.kind == K::TextSymbol || c.kind == K::OtherText;
    case TestKind::Node: return true;
    case TestKind::TextEq: return c.kind == K::TextSymbol && c.label == s.name;
    case TestKind::TextNeq:
      return (c.kind == K::TextSymbol && c.label != s.name) || c.kind == K::OtherText;
  }
  return false;
}

inline LabelClass class_of(const std::vector<LabelClass>& classes, const Tree& t) {
  using K = LabelClass::Kind;
  LabelClass exact{t.kind == NodeKind::Text ? K::TextSymbol : K::Name, t.label};
  if (std::binary_search(classes.begin(), classes.end(), exact)) return exact;
  return {t.kind == NodeKind::Text ? K::OtherText : K::OtherNode, {}};
}

inline DStep to_dstep(const Step& s) {
  DStep d;
  d.axis = s.axis;
  d.name = s.test.name;
  d.has_preds = !s.preds.empty();
  switch (s.test.kind) {
    case NodeTest::Kind::Name: d.test = TestKind::Name; break;
    case NodeTest::Kind::Star: d.test = TestKind::Star; break;
    case NodeTest::Kind::Text: d.test = TestKind::Text; break;
    case NodeTest::Kind::Node: d.test = TestKind::Node; break;
  }
  return d;
}

/// Automaton steps of a predicate path. For a comparison the path is
/// extended with a text step carrying the constant unless it already ends
/// in text(); a final text() step is itself turned into the comparison.
inline std::vector<DStep> predicate_dsteps(const Predicate& p) {
  std::vector<DStep> out;
  for (const Step& s : p.path) out.push_back(to_dstep(s));
  if (p.kind == Predicate::Kind::Eq || p.kind == Predicate::Kind::Neq) {
    TestKind cmp = p.kind == Predicate::Kind::Eq ? TestKind::TextEq : TestKind::TextNeq;
    if (!out.empty() && out.back().test == TestKind::Text && !out.back().has_preds) {
      out.back().test = cmp;
      out.back().name = p.value;
    } else {
      out.push_back(DStep{Axis::Child, cmp, p.value, false});
    }
  }
  return out;
}

class PathDfa {
 public:
  struct Key {
    std::vector<int> horizontal;
    std::vector<int> descendant;
    auto operator<=>(const Key&) const = default;
  };

  struct Transition {
    int down = 0;
    int right = 0;
    bool select = false;
  };

  explicit PathDfa(std::vector<DStep> steps) : steps_(std::move(steps)) {
    std::set<LabelClass> cls;
    for (const DStep& s : steps_) {
      if (s.test == TestKind::Name) cls.insert({LabelClass::Kind::Name, s.name});
      if (s.test == TestKind::TextEq || s.test == TestKind::TextNeq)
        cls.insert({LabelClass::Kind::TextSymbol, s.name});
    }
    cls.insert({LabelClass::Kind::OtherText, {}});
    cls.insert({LabelClass::Kind::OtherNode, {}});
    classes_.assign(cls.begin(), cls.end());
    dead_ = intern({});
  }

  const std::vector<DStep>& steps() const { return steps_; }
  const std::vector<LabelClass>& classes() const { return classes_; }
  std::size_t state_count() const { return keys_.size(); }
  const Key& key(int s) const { return keys_[s]; }
  int dead() const { return dead_; }
  bool is_dead(int s) const { return s == dead_; }

  int intern(const Key& k) {
    auto [it, fresh] = ids_.emplace(k, static_cast<int>(keys_.size()));
    if (fresh) keys_.push_back(k);
    return it->second;
  }

  /// Start for a path evaluated at a node: states for the node's children
  /// and for its following siblings. The context node itself is never
  /// selected.
  std::pair<int, int> node_start() {
    if (steps_.empty()) return {dead_, dead_};
    Key down, right;
    enter(0, down, right);
    return {intern(down), intern(right)};
  }

  /// Start for a path evaluated at the document: the state applied to the
  /// top-level forest, whose nodes are the children of a virtual root.
  int document_start() {
    if (steps_.empty()) return dead_;
    Key down, right;
    enter(0, down, right);
    return intern(down);
  }

  /// Steps whose predicates decide whether a node of class c counts as a
  /// match in state s.
  std::vector<int> predicated_matches(int s, const LabelClass& c) const {
    std::vector<int> out;
    for (int j : candidates(s))
      if (steps_[j].has_preds && matches(steps_[j], c)) out.push_back(j);
    return out;
  }

  /// Transition on class c, where `holds` lists the predicated steps whose
  /// predicates are true at the node. Unlisted predicated steps fail.
  Transition step(int s, const LabelClass& c, const std::vector<int>& holds = {}) {
    const Key k = keys_[s];
    Key down{{}, k.descendant};
    Key right = k;
    bool select = false;
    for (int j : candidates(s)) {
      const DStep& st = steps_[j];
      if (!matches(st, c)) continue;
      if (st.has_preds && std::find(holds.begin(), holds.end(), j) == holds.end()) continue;
      if (j + 1 == static_cast<int>(steps_.size())) {
        select = true;
        continue;
      }
      enter(j + 1, down, right);
    }
    normalize(down);
    normalize(right);
    return {intern(down), intern(right), select};
  }

  /// Enumerates all states reachable from both starts (predicate-free use).
  void complete() {
    node_start();
    document_start();
    for (std::size_t s = 0; s < keys_.size(); ++s)
      for (const LabelClass& c : classes_) step(static_cast<int>(s), c);
  }

  std::string to_dot() {
    complete();
    std::string out = "digraph path {\n";
    for (std::size_t s = 0; s < keys_.size(); ++s) {
      for (const LabelClass& c : classes_) {
        Transition t = step(static_cast<int>(s), c);
        std::string lbl = c.kind == LabelClass::Kind::OtherNode   ? "%t"
                          : c.kind == LabelClass::Kind::OtherText ? "%text"
                          : c.kind == LabelClass::Kind::TextSymbol ? "#" + c.label
                                                                   : c.label;
        out += "  s" + std::to_string(s) + " -> s" + std::to_string(t.down) + " [label=\"" + lbl +
               (t.select ? " select" : "") + " down\"];\n";
        out += "  s" + std::to_string(s) + " -> s" + std::to_string(t.right) + " [label=\"" +
               lbl + " right\"];\n";
      }
    }
    return out + "}\n";
  }

 private:
  std::vector<int> candidates(int s) const {
    std::vector<int> out = keys_[s].horizontal;
    out.insert(out.end(), keys_[s].descendant.begin(), keys_[s].descendant.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // Registers step j as pending after its predecessor matched: children for
  // child steps, the whole subtree for descendant steps, following siblings
  // for following-sibling steps.
  void enter(int j, Key& down, Key& right) const {
    switch (steps_[j].axis) {
      case Axis::Child: down.horizontal.push_back(j); break;
      case Axis::Descendant: down.descendant.push_back(j); break;
      case Axis::FollowingSibling: right.horizontal.push_back(j); break;
    }
    normalize(down);
    normalize(right);
  }

  static void normalize(Key& k) {
    for (auto* v : {&k.horizontal, &k.descendant}) {
      std::sort(v->begin(), v->end());
      v->erase(std::unique(v->begin(), v->end()), v->end());
    }
  }

  std::vector<DStep> steps_;
  std::vector<LabelClass> classes_;
  std::vector<Key> keys_;
  std::map<Key, int> ids_;
  int dead_ = 0;
};

/// Automaton for a path whose predicates are ignored.
inline PathDfa compile_path(const std::vector<Step>& steps) {
  std::vector<DStep> d;
  for (const Step& s : steps) {
    d.push_back(to_dstep(s));
    d.back().has_preds = false;
  }
  PathDfa dfa(std::move(d));
  dfa.complete();
  return dfa;
}

// ---------------------------------------------------------------------------
// Selection

/// A node identified by its sibling list and position.
struct NodeRef {
  const Forest* siblings = nullptr;
  std::size_t index = 0;
  const Tree& node() const { return (*siblings)[index]; }
  bool operator==(const NodeRef&) const = default;
};

namespace detail {
inline void dfa_run(PathDfa& dfa, int s, const Forest& f, std::size_t i,
                    std::vector<NodeRef>& out) {
  for (; i < f.size(); ++i) {
    if (dfa.is_dead(s)) return;
    const Tree& t = f[i];
    auto tr = dfa.step(s, class_of(dfa.classes(), t));
    if (tr.select) out.push_back({&f, i});
    dfa_run(dfa, tr.down, t.children, 0, out);
    s = tr.right;
  }
}
}  // namespace detail

/// Nodes selected by a predicate-free automaton from a context node, in
/// document order.
inline std::vector<NodeRef> dfa_select(PathDfa& dfa, NodeRef ctx) {
  std::vector<NodeRef> out;
  auto [down, right] = dfa.node_start();
  detail::dfa_run(dfa, down, ctx.node().children, 0, out);
  detail::dfa_run(dfa, right, *ctx.siblings, ctx.index + 1, out);
  return out;
}

inline std::vector<NodeRef> dfa_select_document(PathDfa& dfa, const Forest& doc) {
  std::vector<NodeRef> out;
  detail::dfa_run(dfa, dfa.document_start(), doc, 0, out);
  return out;
}

namespace detail {

class PathOracle {
 public:
  explicit PathOracle(const Forest& doc) { number(doc); }

  std::vector<NodeRef> select(const std::vector<Step>& steps, std::vector<NodeRef> ctx,
                              bool from_root, const Forest* doc) {
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const Step& s = steps[k];
      std::vector<NodeRef> next;
      auto consider = [&](NodeRef n) {
        if (test(s.test, n.node()) && preds(s.preds, n)) next.push_back(n);
      };
      if (k == 0 && from_root) {
        // Axes from the virtual document root.
        if (s.axis == Axis::Child) {
          for (std::size_t i = 0; i < doc->size(); ++i) consider({doc, i});
        } else if (s.axis == Axis::Descendant) {
          descendants(*doc, consider);
        }
      } else {
        for (NodeRef c : ctx) {
          const Tree& t = c.node();
          switch (s.axis) {
            case Axis::Child:
              for (std::size_t i = 0; i < t.children.size(); ++i) consider({&t.children, i});
              break;
            case Axis::Descendant:
              descendants(t.children, consider);
              break;
            case Axis::FollowingSibling:
              for (std::size_t i = c.index + 1; i < c.siblings->size(); ++i)
                consider({c.siblings, i});
              break;
          }
        }
      }
      std::sort(next.begin(), next.end(), [&](NodeRef a, NodeRef b) {
        return order_.at(&a.node()) < order_.at(&b.node());
      });
      next.erase(std::unique(next.begin(), next.end(),
                             [](NodeRef a, NodeRef b) { return &a.node() == &b.node(); }),
                 next.end());
      ctx = std::move(next);
    }
    return ctx;
  }

  bool holds(const Predicate& p, NodeRef n) {
    std::vector<NodeRef> sel = select(p.path, {n}, false, nullptr);
    switch (p.kind) {
      case Predicate::Kind::Exists: return !sel.empty();
      case Predicate::Kind::Empty: return sel.empty();
      case Predicate::Kind::Eq:
      case Predicate::Kind::Neq: {
        bool eq = p.kind == Predicate::Kind::Eq;
        bool ends_in_text = !p.path.empty() && p.path.back().test.kind == NodeTest::Kind::Text &&
                            p.path.back().preds.empty();
        for (NodeRef r : sel) {
          if (ends_in_text) {
            if ((r.node().label == p.value) == eq) return true;
            continue;
          }
          for (const Tree& c : r.node().children)
            if (c.kind == NodeKind::Text && (c.label == p.value) == eq) return true;
        }
        return false;
      }
    }
    return false;
  }

 private:
  void number(const Forest& f) {
    for (const Tree& t : f) {
      order_.emplace(&t, order_.size());
      number(t.children);
    }
  }

  template <class F>
  static void descendants(const Forest& f, F& consider) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      consider(NodeRef{&f, i});
      descendants(f[i].children, consider);
    }
  }

  static bool test(const NodeTest& t, const Tree& n) {
    switch (t.kind) {
      case NodeTest::Kind::Name: return n.kind != NodeKind::Text && n.label == t.name;
      case NodeTest::Kind::Star: return n.kind != NodeKind::Text;
      case NodeTest::Kind::Text: return n.kind == NodeKind::Text;
      case NodeTest::Kind::Node: return true;
    }
    return false;
  }

  bool preds(const std::vector<Predicate>& ps, NodeRef n) {
    for (const Predicate& p : ps)
      if (!holds(p, n)) return false;
    return true;
  }

  std::unordered_map<const Tree*, std::size_t> order_;
};

}  // namespace detail

/// Reference path semantics, including predicates, by direct recursion over
/// the document. `doc` is the whole input; ctx is a node inside it.
inline std::vector<NodeRef> select_nodes_oracle(const std::vector<Step>& steps, const Forest& doc,
                                                NodeRef ctx) {
  detail::PathOracle o(doc);
  return o.select(steps, {ctx}, false, &doc);
}

/// As above, with the virtual document root as context ($input).
inline std::vector<NodeRef> select_document_oracle(const std::vector<Step>& steps,
                                                   const Forest& doc) {
  if (steps.empty()) return {};
  detail::PathOracle o(doc);
  return o.select(steps, {}, true, &doc);
}

/// Truth of a predicate at a node, by the reference semantics.
inline bool predicate_oracle(const Predicate& p, const Forest& doc, NodeRef n) {
  detail::PathOracle o(doc);
  return o.holds(p, n);
}

}  // namespace xqmft
