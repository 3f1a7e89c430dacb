#pragma once

// Unused parameters by backward reachability over an explicit flow graph.

#include <deque>
#include <map>
#include <set>
#include <vector>

#include "xqmft/optimizer.hpp"

namespace xqmft::testing {

inline ParamSet unused_params_oracle(const Mft& m) {
  // Edge (callee, k) -> (q, i): y_i of q occurs bare in argument k of a call.
  std::map<ParamId, std::vector<ParamId>> flows_from;
  std::set<ParamId> roots;
  std::function<void(const Rhs&, int, const ParamId*)> walk = [&](const Rhs& rhs, int q,
                                                                   const ParamId* into) {
    for (const Item& it : rhs) {
      if (auto* p = std::get_if<Param>(&it.v)) {
        ParamId self{q, p->index};
        if (into)
          flows_from[*into].push_back(self);
        else
          roots.insert(self);
      } else if (auto* o = std::get_if<OutNode>(&it.v)) {
        walk(o->children, q, into);
      } else if (auto* c = std::get_if<Call>(&it.v)) {
        for (std::size_t k = 0; k < c->args.size(); ++k) {
          ParamId target{c->state, static_cast<int>(k) + 1};
          walk(c->args[k], q, &target);
        }
      }
    }
  };
  for (const Rule& r : m.rules) walk(r.rhs, r.state, nullptr);

  std::set<ParamId> seen(roots.begin(), roots.end());
  std::deque<ParamId> todo(roots.begin(), roots.end());
  while (!todo.empty()) {
    ParamId p = todo.front();
    todo.pop_front();
    for (const ParamId& src : flows_from[p])
      if (seen.insert(src).second) todo.push_back(src);
  }
  ParamSet unused;
  for (std::size_t q = 0; q < m.states.size(); ++q)
    for (int i = 1; i < m.states[q].rank; ++i)
      if (!seen.count({static_cast<int>(q), i})) unused.insert({static_cast<int>(q), i});
  return unused;
}

}  // namespace xqmft::testing
