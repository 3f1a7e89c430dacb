#pragma once

// Composition of transducers. Forest transducers are split into a tree
// transducer over the binary concatenation symbol "@" followed by eval.

#include <chrono>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "xqmft/mft.hpp"
#include "xqmft/optimizer.hpp"

namespace xqmft {

class CompositionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CompositionReport {
  std::size_t sigma = 0;
  std::size_t size_m1 = 0, size_m2 = 0, size_out = 0;
  std::size_t rules_out = 0;
  double ms = 0;
  /// |M| / (|Sigma| |M1| |M2|)
  double bound_ratio() const {
    double d = static_cast<double>(sigma ? sigma : 1) * static_cast<double>(size_m1) *
               static_cast<double>(size_m2);
    return d ? static_cast<double>(size_out) / d : 0;
  }
};

namespace detail {

inline Item concat_node(Item a, Item b) { return out(std::string(kConcatLabel), {std::move(a), std::move(b)}); }

inline Rhs as_rhs(Item it) {
  if (std::holds_alternative<Nil>(it.v)) return {};
  return {std::move(it)};
}

inline Item encode_item(const Item& it);

inline Item encode_forest(const Rhs& items, std::size_t from = 0) {
  if (from == items.size()) return nil();
  if (from + 1 == items.size()) return encode_item(items[from]);
  return concat_node(encode_item(items[from]), encode_forest(items, from + 1));
}

inline Item encode_item(const Item& it) {
  if (auto* o = std::get_if<OutNode>(&it.v)) {
    OutNode n{o->kind, o->label, o->copy_label, {encode_forest(o->children), nil()}};
    return Item{std::move(n)};
  }
  if (auto* c = std::get_if<Call>(&it.v)) {
    Call n{c->state, c->input, {}};
    for (const Rhs& a : c->args) n.args.push_back(as_rhs(encode_forest(a)));
    return Item{std::move(n)};
  }
  return it;
}

inline bool is_concat_item(const OutNode& o) {
  return !o.copy_label && o.kind == NodeKind::Element && o.label == kConcatLabel;
}

inline void decode_item(const Item& it, Rhs& out);

inline Rhs decode_rhs(const Rhs& rhs) {
  Rhs out;
  for (const Item& it : rhs) decode_item(it, out);
  return out;
}

inline void decode_item(const Item& it, Rhs& out) {
  if (auto* o = std::get_if<OutNode>(&it.v)) {
    if (o->children.size() != 2)
      throw CompositionError("recompose_eval: output node is not binary");
    if (is_concat_item(*o)) {
      decode_item(o->children[0], out);
      decode_item(o->children[1], out);
      return;
    }
    OutNode n{o->kind, o->label, o->copy_label, {}};
    decode_item(o->children[0], n.children);
    out.push_back(Item{std::move(n)});
    decode_item(o->children[1], out);
  } else if (auto* c = std::get_if<Call>(&it.v)) {
    Call n{c->state, c->input, {}};
    for (const Rhs& a : c->args) n.args.push_back(decode_rhs(a));
    out.push_back(Item{std::move(n)});
  } else if (!std::holds_alternative<Nil>(it.v)) {
    out.push_back(it);
  }
}

}  // namespace detail

/// The tree transducer obtained by writing every concatenation in a
/// right-hand side with the binary symbol "@": [[m]] = eval . [[decompose_eval(m)]].
inline Mft decompose_eval(const Mft& m) {
  Mft out = m;
  for (Rule& r : out.rules) r.rhs = detail::as_rhs(detail::encode_forest(r.rhs));
  return out;
}

/// Inverse of decompose_eval: interprets "@" nodes as concatenation.
inline Mft recompose_eval(const Mft& m) {
  Mft out = m;
  for (Rule& r : out.rules) r.rhs = detail::decode_rhs(r.rhs);
  return out;
}

/// eval as a macro tree transducer with one parameter holding the right
/// context. It has only default, "@" and epsilon rules.
inline Mft eval_mtt() {
  Mft e;
  int e0 = e.add_state("e0", 1);
  int ev = e.add_state("e", 2);
  e.initial = e0;
  e.add_any_rule(e0, {call(ev, 0, {{nil()}})});
  e.add_rule(ev, Guard::on(name_symbol(std::string(kConcatLabel))),
             {call(ev, 1, {{call(ev, 2, {{param(1)}})}})});
  e.add_rule(ev, Guard::any(), {copy_node({call(ev, 1, {{nil()}}), call(ev, 2, {{param(1)}})})});
  e.add_rule(ev, Guard::eps(), {param(1)});
  return e;
}

/// An MTT with the binary semantics of the forest transducer `m`: every
/// state receives the encoding of the forest that follows its output.
inline Mft ft_to_mtt(const Mft& m) {
  if (!is_parameter_free(m)) throw CompositionError("ft_to_mtt: transducer has parameters");
  Mft out;
  for (const StateInfo& s : m.states) out.add_state(s.name, 2);
  int init = out.add_state(m.states[m.initial].name + "_init", 1);
  out.initial = init;
  out.sigma = m.sigma;
  std::function<Item(const Rhs&, std::size_t, Item)> enc = [&](const Rhs& f, std::size_t i,
                                                                Item tail) -> Item {
    if (i == f.size()) return tail;
    const Item& it = f[i];
    if (auto* o = std::get_if<OutNode>(&it.v)) {
      OutNode n{o->kind, o->label, o->copy_label,
                {enc(o->children, 0, nil()), enc(f, i + 1, std::move(tail))}};
      return Item{std::move(n)};
    }
    if (auto* c = std::get_if<Call>(&it.v))
      return call(c->state, c->input, {detail::as_rhs(enc(f, i + 1, std::move(tail)))});
    return enc(f, i + 1, std::move(tail));
  };
  for (const Rule& r : m.rules)
    out.rules.push_back({r.state, r.guard, detail::as_rhs(enc(r.rhs, 0, param(1)))});
  out.add_any_rule(init, {call(m.initial, 0, {{nil()}})});
  return out;
}

namespace detail {

// Symbols on which some rule of `m` is guarded, plus whether a text rule exists.
inline std::set<Symbol> guard_symbols(const Mft& m, bool* has_text = nullptr) {
  std::set<Symbol> s;
  if (has_text) *has_text = false;
  for (const Rule& r : m.rules) {
    if (r.guard.kind == GuardKind::Symbol) s.insert(r.guard.symbol);
    if (r.guard.kind == GuardKind::Text && has_text) *has_text = true;
  }
  return s;
}

// Adds to m1, for every symbol a guarding a rule of m2 but no rule of state
// q, a copy of the rule q would apply to a. If m2 has a text rule, states of
// m1 without one get a text rule copied from their default rule.
inline Mft instantiate_symbols(const Mft& m1, const Mft& m2) {
  bool m2_text = false;
  std::set<Symbol> syms = guard_symbols(m2, &m2_text);
  Mft out = m1;
  RuleIndex idx(m1);
  for (int q = 0; q < static_cast<int>(m1.states.size()); ++q) {
    for (const Symbol& a : syms) {
      if (idx.exact(q, a) >= 0) continue;
      int k = idx.lookup(q, a);
      if (k >= 0) out.add_rule(q, Guard::on(a), m1.rules[k].rhs);
    }
    if (m2_text && idx.text(q) < 0 && idx.fallback(q) >= 0)
      out.add_rule(q, Guard::text_node(), m1.rules[idx.fallback(q)].rhs);
  }
  return out;
}

// Product construction for M1 followed by M2, both tree-shaped. When
// `replicate` is set, M1 may have parameters and M2 must not (parameters of
// M1 are copied once per state of M2); otherwise M1 must be parameter free
// and composed states inherit M2's parameters.
class Product {
 public:
  Product(const Mft& m1, const Mft& m2, bool replicate)
      : m1_(instantiate_symbols(m1, m2)), m2_(m2), idx2_(m2), replicate_(replicate),
        n_(static_cast<int>(m2.states.size())) {}

  Mft run() {
    out_.sigma = m1_.sigma;
    out_.sigma.insert(m2_.sigma.begin(), m2_.sigma.end());
    out_.initial = pair_state(m1_.initial, m2_.initial);
    while (!work_.empty()) {
      Key k = work_.back();
      work_.pop_back();
      build(k);
    }
    return remove_unreachable(out_);
  }

 private:
  // (rule, address, p) for node states; (-1 - q, {}, p) for pair states.
  using Key = std::tuple<int, std::vector<int>, int>;

  int pair_rank(int q, int p) const {
    return replicate_ ? 1 + (m1_.states[q].rank - 1) * n_ : m2_.states[p].rank;
  }

  int intern(const Key& k, std::string name, int rank) {
    auto [it, fresh] = ids_.emplace(k, -1);
    if (fresh) {
      it->second = out_.add_state(std::move(name), rank);
      work_.push_back(k);
    }
    return it->second;
  }

  int pair_state(int q, int p) {
    return intern({-1 - q, {}, p}, "<" + m1_.states[q].name + "|" + m2_.states[p].name + ">",
                  pair_rank(q, p));
  }

  int node_state(int r, const std::vector<int>& u, int p) {
    std::string name = "<r" + std::to_string(r);
    for (int i : u) name += "." + std::to_string(i);
    name += "|" + m2_.states[p].name + ">";
    return intern({r, u, p}, std::move(name), pair_rank(m1_.rules[r].state, p));
  }

  Rhs all_params(int state) const {
    Rhs ys;
    for (int j = 1; j < out_.states[state].rank; ++j) ys.push_back(param(j));
    return ys;
  }
  std::vector<Rhs> param_args(int state) const {
    std::vector<Rhs> a;
    for (int j = 1; j < out_.states[state].rank; ++j) a.push_back({param(j)});
    return a;
  }

  const Item& node_at(int r, const std::vector<int>& u) const {
    static const Item kNil = nil();
    const Rhs& rhs = m1_.rules[r].rhs;
    if (rhs.empty()) return kNil;
    const Item* it = &rhs[0];
    for (int i : u) {
      const Rhs* kids = nullptr;
      if (auto* o = std::get_if<OutNode>(&it->v)) kids = &o->children;
      else if (auto* c = std::get_if<Call>(&it->v)) kids = &c->args[i - 1];
      if (std::holds_alternative<OutNode>(it->v)) {
        const Item& child = (*kids)[i - 1];
        it = &child;
      } else {
        if (kids->empty()) return kNil;
        it = &(*kids)[0];
      }
    }
    return *it;
  }

  void build(const Key& k) {
    const auto& [rk, u, p] = k;
    int self = ids_.at(k);
    if (rk < 0) {
      int q = -1 - rk;
      for (int r = 0; r < static_cast<int>(m1_.rules.size()); ++r) {
        if (m1_.rules[r].state != q) continue;
        int target = node_state(r, {}, p);
        out_.add_rule(self, m1_.rules[r].guard, {call(target, 0, param_args(self))});
      }
      return;
    }
    const Rule& r = m1_.rules[rk];
    out_.add_rule(self, r.guard, translate(rk, u, p, self));
    if (r.guard.kind != GuardKind::Default) out_.add_rule(self, Guard::any(), {});
    if (r.guard.kind != GuardKind::Epsilon) out_.add_rule(self, Guard::eps(), {});
  }

  // Rule of M2 state p applicable to the node u of M1's rule r.
  int m2_rule(const Rule& r, const Item& node, int p) const {
    if (std::holds_alternative<Nil>(node.v)) return idx2_.eps(p);
    const auto& o = std::get<OutNode>(node.v);
    if (!o.copy_label) return idx2_.lookup(p, o.kind, o.label);
    switch (r.guard.kind) {
      case GuardKind::Symbol: return idx2_.lookup(p, r.guard.symbol);
      case GuardKind::Text: return idx2_.text(p) >= 0 ? idx2_.text(p) : idx2_.fallback(p);
      default: return idx2_.fallback(p);
    }
  }

  Rhs translate(int rk, const std::vector<int>& u, int p, int self) {
    const Rule& r = m1_.rules[rk];
    const Item& node = node_at(rk, u);
    if (auto* y = std::get_if<Param>(&node.v)) {
      if (!replicate_) throw CompositionError("compose: first transducer has parameters");
      return {param((y->index - 1) * n_ + p + 1)};
    }
    if (auto* c = std::get_if<Call>(&node.v)) {
      std::vector<Rhs> args;
      if (replicate_) {
        for (std::size_t a = 0; a < c->args.size(); ++a) {
          std::vector<int> ua = u;
          ua.push_back(static_cast<int>(a) + 1);
          for (int j = 0; j < n_; ++j) args.push_back({call(node_state(rk, ua, j), 0, param_args(self))});
        }
      } else {
        if (!c->args.empty()) throw CompositionError("compose: first transducer has parameters");
        args = param_args(self);
      }
      return {call(pair_state(c->state, p), c->input, std::move(args))};
    }
    int k = m2_rule(r, node, p);
    if (k < 0) throw CompositionError("compose: no rule of " + m2_.states[p].name + " applies");
    return rename(m2_.rules[k].rhs, rk, u, node, self);
  }

  // Copies a right-hand side of M2, redirecting its calls on x_i to the
  // states of the i-th child of u (x0 to u itself).
  Rhs rename(const Rhs& rhs, int rk, const std::vector<int>& u, const Item& node, int self) {
    Rhs res;
    for (const Item& it : rhs) {
      if (auto* o = std::get_if<OutNode>(&it.v)) {
        OutNode n = *o;
        if (n.copy_label) {
          const auto& src = std::get<OutNode>(node.v);
          n.copy_label = src.copy_label;
          n.kind = src.kind;
          n.label = src.label;
        }
        n.children = rename(o->children, rk, u, node, self);
        res.push_back(Item{std::move(n)});
      } else if (auto* c = std::get_if<Call>(&it.v)) {
        std::vector<int> ui = u;
        if (c->input) ui.push_back(c->input);
        std::vector<Rhs> args;
        if (replicate_) {
          args = param_args(self);
        } else {
          for (const Rhs& a : c->args) args.push_back(rename(a, rk, u, node, self));
        }
        res.push_back(call(node_state(rk, ui, c->state), 0, std::move(args)));
      } else {
        res.push_back(it);
      }
    }
    return res;
  }

  Mft m1_;
  const Mft& m2_;
  RuleIndex idx2_;
  bool replicate_;
  int n_;
  Mft out_;
  std::map<Key, int> ids_;
  std::vector<Key> work_;
};

template <class F>
Mft timed(const Mft& m1, const Mft& m2, CompositionReport* report, F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  Mft m = f();
  if (report) {
    std::set<Symbol> s = m1.sigma;
    s.insert(m2.sigma.begin(), m2.sigma.end());
    report->sigma = s.size();
    report->size_m1 = size(m1);
    report->size_m2 = size(m2);
    report->size_out = size(m);
    report->rules_out = m.rules.size();
    report->ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return m;
}

inline void require(bool ok, const char* what) {
  if (!ok) throw CompositionError(what);
}

}  // namespace detail

/// [[M]] = [[m2]] after [[m1]] for an MTT m1 and a TT m2 (a TT when m1 is a TT).
inline Mft compose_mtt_tt(const Mft& m1, const Mft& m2, CompositionReport* report = nullptr) {
  detail::require(is_tree_shaped(m1), "compose: first operand must be an MTT");
  detail::require(classify(m2) == TransducerClass::TT, "compose: second operand must be a TT");
  return detail::timed(m1, m2, report, [&] { return detail::Product(m1, m2, true).run(); });
}

inline Mft compose_tt_tt(const Mft& m1, const Mft& m2, CompositionReport* report = nullptr) {
  detail::require(classify(m1) == TransducerClass::TT, "compose: first operand must be a TT");
  return compose_mtt_tt(m1, m2, report);
}

/// TT followed by MTT.
inline Mft compose_tt_mtt(const Mft& m1, const Mft& m2, CompositionReport* report = nullptr) {
  detail::require(classify(m1) == TransducerClass::TT, "compose: first operand must be a TT");
  detail::require(is_tree_shaped(m2), "compose: second operand must be an MTT");
  return detail::timed(m1, m2, report, [&] { return detail::Product(m1, m2, false).run(); });
}

/// MTT followed by FT, an MFT.
inline Mft compose_mtt_ft(const Mft& m1, const Mft& m2, CompositionReport* report = nullptr) {
  detail::require(is_tree_shaped(m1), "compose: first operand must be an MTT");
  detail::require(is_parameter_free(m2), "compose: second operand must be an FT");
  return detail::timed(m1, m2, report, [&] {
    return recompose_eval(detail::Product(m1, decompose_eval(m2), true).run());
  });
}

/// TT followed by FT, an FT.
inline Mft compose_tt_ft(const Mft& m1, const Mft& m2, CompositionReport* report = nullptr) {
  detail::require(classify(m1) == TransducerClass::TT, "compose: first operand must be a TT");
  return compose_mtt_ft(m1, m2, report);
}

/// FT followed by TT, an MTT: the FT is split into a TT and eval, eval is
/// absorbed as an MTT, and the result is composed with the TT.
inline Mft compose_ft_tt(const Mft& m1, const Mft& m2, CompositionReport* report = nullptr) {
  detail::require(is_parameter_free(m1), "compose: first operand must be an FT");
  detail::require(classify(m2) == TransducerClass::TT, "compose: second operand must be a TT");
  return detail::timed(m1, m2, report, [&] {
    Mft first = detail::Product(decompose_eval(m1), eval_mtt(), false).run();
    return detail::Product(first, m2, true).run();
  });
}

/// FT followed by FT, an MFT.
inline Mft compose_ft_ft(const Mft& m1, const Mft& m2, CompositionReport* report = nullptr) {
  detail::require(is_parameter_free(m1), "compose: first operand must be an FT");
  return compose_mtt_ft(ft_to_mtt(m1), m2, report);
}

}  // namespace xqmft
