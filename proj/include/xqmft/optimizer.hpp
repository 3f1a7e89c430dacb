#pragma once

// Parameter reduction: unreachable states, unused parameters, constant
// parameters and stay moves, iterated to a fixpoint.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xqmft/mft.hpp"
#include "xqmft/query.hpp"

namespace xqmft {

/// A parameter (state, index) with 1 <= index <= rank(state) - 1.
struct ParamId {
  int state = 0;
  int index = 1;
  auto operator<=>(const ParamId&) const = default;
};

using ParamSet = std::set<ParamId>;

namespace detail {

// Keeps the states flagged in `keep`, renumbering calls and dropping the
// rules of deleted states. The initial state is always kept.
inline Mft keep_states(const Mft& m, std::vector<bool> keep) {
  keep[m.initial] = true;
  std::vector<int> renum(m.states.size(), -1);
  Mft out;
  out.sigma = m.sigma;
  for (std::size_t q = 0; q < m.states.size(); ++q)
    if (keep[q]) renum[q] = out.add_state(m.states[q].name, m.states[q].rank);
  out.initial = renum[m.initial];
  for (const Rule& r : m.rules) {
    if (!keep[r.state]) continue;
    Rule nr = r;
    nr.state = renum[r.state];
    for_each_item_mut(nr.rhs, [&](Item& it) {
      if (auto* c = std::get_if<Call>(&it.v)) c->state = renum[c->state];
    });
    out.rules.push_back(std::move(nr));
  }
  return out;
}

// Calls f(caller_state, call) for every call in every rule.
template <class F>
void for_each_call(const Mft& m, F&& f) {
  for (const Rule& r : m.rules)
    for_each_item(r.rhs, [&](const Item& it) {
      if (auto* c = std::get_if<Call>(&it.v)) f(r.state, *c);
    });
}

// Parameters occurring bare in `rhs`, i.e. not inside an argument of a call.
inline void bare_params(const Rhs& rhs, std::set<int>& out) {
  for (const Item& it : rhs) {
    if (auto* p = std::get_if<Param>(&it.v)) out.insert(p->index);
    else if (auto* o = std::get_if<OutNode>(&it.v)) bare_params(o->children, out);
  }
}

// Replaces Param{i} by args[i-1] and retargets input variables through
// `input_map` (indexed by 0, 1, 2).
inline Rhs substitute(const Rhs& rhs, const std::vector<Rhs>& args, const int input_map[3]) {
  Rhs out;
  for (const Item& it : rhs) {
    if (auto* p = std::get_if<Param>(&it.v)) {
      const Rhs& a = args[p->index - 1];
      out.insert(out.end(), a.begin(), a.end());
    } else if (auto* o = std::get_if<OutNode>(&it.v)) {
      OutNode n = *o;
      n.children = substitute(o->children, args, input_map);
      out.push_back(Item{std::move(n)});
    } else if (auto* c = std::get_if<Call>(&it.v)) {
      Call n{c->state, input_map[c->input], {}};
      for (const Rhs& a : c->args) n.args.push_back(substitute(a, args, input_map));
      out.push_back(Item{std::move(n)});
    } else {
      out.push_back(it);
    }
  }
  return out;
}

}  // namespace detail

/// States reachable from the initial state in the call dependency graph.
inline std::vector<bool> reachable_states(const Mft& m) {
  std::vector<std::vector<int>> succ(m.states.size());
  detail::for_each_call(m, [&](int q, const Call& c) { succ[q].push_back(c.state); });
  std::vector<bool> seen(m.states.size(), false);
  std::vector<int> work{m.initial};
  seen[m.initial] = true;
  while (!work.empty()) {
    int q = work.back();
    work.pop_back();
    for (int s : succ[q])
      if (!seen[s]) {
        seen[s] = true;
        work.push_back(s);
      }
  }
  return seen;
}

inline Mft remove_unreachable(const Mft& m) { return detail::keep_states(m, reachable_states(m)); }

/// Necessary parameters: the least set containing bare occurrences and closed
/// under flow into necessary argument positions.
inline ParamSet necessary_params(const Mft& m) {
  ParamSet s;
  for (const Rule& r : m.rules) {
    std::set<int> bare;
    detail::bare_params(r.rhs, bare);
    for (int i : bare) s.insert({r.state, i});
  }
  for (bool changed = true; changed;) {
    changed = false;
    detail::for_each_call(m, [&](int q, const Call& c) {
      for (std::size_t k = 0; k < c.args.size(); ++k) {
        if (!s.count({c.state, static_cast<int>(k) + 1})) continue;
        std::set<int> bare;
        detail::bare_params(c.args[k], bare);
        for (int i : bare) changed |= s.insert({q, i}).second;
      }
    });
  }
  return s;
}

inline ParamSet unused_param_set(const Mft& m) {
  ParamSet necessary = necessary_params(m);
  ParamSet unused;
  for (std::size_t q = 0; q < m.states.size(); ++q)
    for (int i = 1; i < m.states[q].rank; ++i)
      if (!necessary.count({static_cast<int>(q), i})) unused.insert({static_cast<int>(q), i});
  return unused;
}

namespace detail {

// Drops the parameters in `drop` from left-hand sides and the matching
// arguments from every call. `value` supplies the replacement for remaining
// occurrences of a dropped parameter in its own state's rules.
template <class Value>
Mft drop_params(const Mft& m, const ParamSet& drop, Value value) {
  if (drop.empty()) return m;
  std::vector<std::vector<int>> renum(m.states.size());
  Mft out = m;
  for (std::size_t q = 0; q < m.states.size(); ++q) {
    int next = 1;
    renum[q].assign(m.states[q].rank, 0);
    for (int i = 1; i < m.states[q].rank; ++i)
      renum[q][i] = drop.count({static_cast<int>(q), i}) ? 0 : next++;
    out.states[q].rank = next;
  }
  std::function<Rhs(const Rhs&, int)> rewrite = [&](const Rhs& rhs, int q) {
    Rhs res;
    for (const Item& it : rhs) {
      if (auto* p = std::get_if<Param>(&it.v)) {
        if (int j = renum[q][p->index]) {
          res.push_back(param(j));
        } else {
          Rhs v = value(ParamId{q, p->index});
          res.insert(res.end(), v.begin(), v.end());
        }
      } else if (auto* o = std::get_if<OutNode>(&it.v)) {
        OutNode n = *o;
        n.children = rewrite(o->children, q);
        res.push_back(Item{std::move(n)});
      } else if (auto* c = std::get_if<Call>(&it.v)) {
        Call n{c->state, c->input, {}};
        for (std::size_t k = 0; k < c->args.size(); ++k)
          if (renum[c->state][k + 1]) n.args.push_back(rewrite(c->args[k], q));
        res.push_back(Item{std::move(n)});
      } else {
        res.push_back(it);
      }
    }
    return res;
  };
  for (Rule& r : out.rules) r.rhs = rewrite(r.rhs, r.state);
  return out;
}

}  // namespace detail

inline Mft remove_unused_params(const Mft& m) {
  return detail::drop_params(m, unused_param_set(m), [](ParamId) { return Rhs{}; });
}

/// Parameters instantiated by the same ground forest at every call site
/// (ignoring calls that pass the parameter on to itself).
inline std::map<ParamId, Rhs> constant_param_map(const Mft& m) {
  std::map<ParamId, std::optional<Rhs>> seen;
  std::set<ParamId> varying;
  detail::for_each_call(m, [&](int q, const Call& c) {
    for (std::size_t k = 0; k < c.args.size(); ++k) {
      ParamId id{c.state, static_cast<int>(k) + 1};
      const Rhs& a = c.args[k];
      if (q == c.state && a.size() == 1) {
        if (auto* p = std::get_if<Param>(&a[0].v); p && p->index == id.index) continue;
      }
      if (!is_ground(a) || uses_copy_label(a)) {
        varying.insert(id);
        continue;
      }
      auto& v = seen[id];
      if (!v) v = a;
      else if (*v != a) varying.insert(id);
    }
  });
  std::map<ParamId, Rhs> out;
  for (auto& [id, v] : seen)
    if (!varying.count(id) && id.state != m.initial) out.emplace(id, *v);
  return out;
}

inline Mft remove_constant_params(const Mft& m) {
  auto consts = constant_param_map(m);
  ParamSet drop;
  for (auto& [id, v] : consts) drop.insert(id);
  return detail::drop_params(m, drop, [&](ParamId id) { return consts.at(id); });
}


namespace detail {

inline constexpr std::size_t kInlineLimit = 32;

// States given by a %-shorthand rule pair whose right-hand side reads only
// x0 and parameters.
inline bool shorthand_state(const Mft& m, const RuleIndex& idx, int q, const Rhs** body) {
  int count = 0;
  for (const Rule& r : m.rules) count += r.state == q;
  int d = idx.fallback(q), e = idx.eps(q);
  if (count != 2 || d < 0 || e < 0 || m.rules[d].rhs != m.rules[e].rhs) return false;
  const Rhs& rhs = m.rules[d].rhs;
  if (uses_input(rhs, 1) || uses_input(rhs, 2) || uses_copy_label(rhs)) return false;
  bool self = false;
  for_each_item(rhs, [&](const Item& it) {
    if (auto* c = std::get_if<Call>(&it.v); c && c->state == q) self = true;
  });
  if (self) return false;
  *body = &rhs;
  return true;
}

inline Rhs inline_calls(const Rhs& rhs, const std::function<const Rhs*(const Call&)>& target,
                        bool& changed) {
  Rhs out;
  for (const Item& it : rhs) {
    if (auto* o = std::get_if<OutNode>(&it.v)) {
      OutNode n = *o;
      n.children = inline_calls(o->children, target, changed);
      out.push_back(Item{std::move(n)});
    } else if (auto* c = std::get_if<Call>(&it.v)) {
      Call n{c->state, c->input, {}};
      for (const Rhs& a : c->args) n.args.push_back(inline_calls(a, target, changed));
      if (const Rhs* body = target(n)) {
        const int map[3] = {n.input, n.input == 0 ? 1 : -1, n.input == 0 ? 2 : -1};
        Rhs s = substitute(*body, n.args, map);
        out.insert(out.end(), s.begin(), s.end());
        changed = true;
      } else {
        out.push_back(Item{std::move(n)});
      }
    } else {
      out.push_back(it);
    }
  }
  return out;
}

// The callee rule that necessarily applies to a stay call made from a rule
// with guard `g` in state `caller`, or -1 if the guard does not determine it.
inline int determined_rule(const Mft& m, const RuleIndex& idx, int caller, const Guard& g,
                           int callee) {
  auto symbols = [&](int q, bool text) {
    std::set<std::string> s;
    for (const Rule& r : m.rules)
      if (r.state == q && r.guard.kind == GuardKind::Symbol && r.guard.symbol.text == text)
        s.insert(r.guard.symbol.label);
    return s;
  };
  auto subset = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  switch (g.kind) {
    case GuardKind::Symbol:
      return idx.lookup(callee, g.symbol);
    case GuardKind::Epsilon:
      return idx.eps(callee);
    case GuardKind::Text:
      if (!subset(symbols(callee, true), symbols(caller, true))) return -1;
      return idx.text(callee) >= 0 ? idx.text(callee) : idx.fallback(callee);
    case GuardKind::Default:
      if (!subset(symbols(callee, true), symbols(caller, true)) ||
          !subset(symbols(callee, false), symbols(caller, false)))
        return -1;
      if (idx.text(caller) < 0 && idx.text(callee) >= 0) return -1;
      return idx.fallback(callee);
  }
  return -1;
}

}  // namespace detail

/// Inlines %-shorthand states at their call sites and deletes them, then
/// replaces stay calls whose applicable rule is fixed by the caller's guard
/// with that rule's right-hand side.
inline Mft remove_stay_moves(const Mft& m) {
  Mft out = m;
  for (int q = 0; q < static_cast<int>(out.states.size()); ++q) {
    if (q == out.initial) continue;
    RuleIndex idx(out);
    const Rhs* body = nullptr;
    if (!detail::shorthand_state(out, idx, q, &body)) continue;
    std::size_t sites = 0;
    detail::for_each_call(out, [&](int, const Call& c) { sites += c.state == q; });
    if (sites == 0 || (sites > 1 && rhs_size(*body) > detail::kInlineLimit)) continue;
    Rhs copy = *body;
    bool changed = false;
    for (Rule& r : out.rules)
      if (r.state != q)
        r.rhs = detail::inline_calls(
            r.rhs, [&](const Call& c) { return c.state == q ? &copy : nullptr; }, changed);
    std::vector<bool> keep(out.states.size(), true);
    keep[q] = false;
    out = detail::keep_states(out, keep);
    --q;
  }

  RuleIndex idx(out);
  std::vector<Rule> rules = out.rules;
  for (Rule& r : rules) {
    bool changed = false;
    r.rhs = detail::inline_calls(
        r.rhs,
        [&](const Call& c) -> const Rhs* {
          if (c.input != 0 || c.state == r.state) return nullptr;
          int k = detail::determined_rule(out, idx, r.state, r.guard, c.state);
          if (k < 0 || uses_input(out.rules[k].rhs, 0)) return nullptr;
          if (rhs_size(out.rules[k].rhs) > detail::kInlineLimit) return nullptr;
          return &out.rules[k].rhs;
        },
        changed);
  }
  out.rules = std::move(rules);
  return out;
}

struct PassStats {
  std::string pass;
  std::size_t states_before = 0, states_after = 0;
  std::size_t params_before = 0, params_after = 0;
  std::size_t size_before = 0, size_after = 0;
};

struct OptimizeReport {
  std::vector<PassStats> passes;
  int rounds = 0;
};

inline constexpr int kMaxOptimizeRounds = 50;

/// Applies the four reductions in order until none changes the transducer.
inline Mft optimize(const Mft& m, OptimizeReport* report = nullptr) {
  using Pass = Mft (*)(const Mft&);
  const std::pair<const char*, Pass> passes[] = {
      {"unreachable", remove_unreachable},
      {"unused", remove_unused_params},
      {"constant", remove_constant_params},
      {"stay", remove_stay_moves},
  };
  Mft cur = m;
  for (int round = 0; round < kMaxOptimizeRounds; ++round) {
    bool changed = false;
    for (auto [name, pass] : passes) {
      Mft next = pass(cur);
      if (report)
        report->passes.push_back({name, cur.states.size(), next.states.size(), total_params(cur),
                                  total_params(next), size(cur), size(next)});
      if (!(next.states == cur.states && next.rules == cur.rules && next.initial == cur.initial))
        changed = true;
      cur = std::move(next);
    }
    if (report) report->rounds = round + 1;
    if (!changed) break;
  }
  return cur;
}

namespace detail {

inline bool has_predicates(const Path& p) {
  for (const Step& s : p.steps)
    if (!s.preds.empty()) return true;
  return false;
}

inline bool ft_eligible(const Query& q, bool in_for) {
  switch (q.kind) {
    case Query::Kind::PathExpr:
      if (has_predicates(q.path)) return false;
      return !(in_for && q.path.steps.empty());
    case Query::Kind::For:
      return !has_predicates(q.path) && ft_eligible(q.children[0], true);
    default:
      for (const Query& c : q.children)
        if (!ft_eligible(c, in_for)) return false;
      return true;
  }
}

}  // namespace detail

/// True iff no path carries a predicate and no output variable occurs inside
/// a for clause; such programs optimize to parameter-free transducers.
inline bool check_ft_eligibility(const Query& q) { return detail::ft_eligible(q, false); }

}  // namespace xqmft
