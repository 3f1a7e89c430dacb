#pragma once

// Translation of MinXQuery programs into macro forest transducers.

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "xqmft/mft.hpp"
#include "xqmft/path_dfa.hpp"
#include "xqmft/query.hpp"

namespace xqmft {

class CompileError : public std::runtime_error {
 public:
  explicit CompileError(std::vector<Diagnostic> diags)
      : std::runtime_error(diags.empty() ? "compile error" : diags.front().message),
        diags_(std::move(diags)) {}
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

namespace detail {

/// Common prefix and suffix of two branches are hoisted out of the
/// conditional call `cond(x0, then, else)`.
inline Rhs conditional(int cond, Rhs then_branch, Rhs else_branch) {
  std::size_t pre = 0;
  while (pre < then_branch.size() && pre < else_branch.size() &&
         then_branch[pre] == else_branch[pre])
    ++pre;
  std::size_t suf = 0;
  while (suf < then_branch.size() - pre && suf < else_branch.size() - pre &&
         then_branch[then_branch.size() - 1 - suf] == else_branch[else_branch.size() - 1 - suf])
    ++suf;
  Rhs out(then_branch.begin(), then_branch.begin() + static_cast<std::ptrdiff_t>(pre));
  Rhs t(then_branch.begin() + static_cast<std::ptrdiff_t>(pre),
        then_branch.end() - static_cast<std::ptrdiff_t>(suf));
  Rhs e(else_branch.begin() + static_cast<std::ptrdiff_t>(pre),
        else_branch.end() - static_cast<std::ptrdiff_t>(suf));
  if (t != e) out.push_back(call(cond, 0, {std::move(t), std::move(e)}));
  out.insert(out.end(), then_branch.end() - static_cast<std::ptrdiff_t>(suf), then_branch.end());
  return out;
}

class Compiler {
 public:
  Mft run(const Query& q) {
    int q0 = m_.add_state("q0", 1);
    copy_ = m_.add_state("q1_copy", 1);
    m_.add_rule(copy_, Guard::any(), {copy_node({call(copy_, 1)}), call(copy_, 2)});
    m_.add_rule(copy_, Guard::eps(), {});
    int top = fresh("top", 2);
    m_.add_any_rule(q0, {call(top, 0, {{call(copy_, 0)}})});
    std::vector<std::string> rho{kInputVar};
    translate(q, rho, top, kInputVar);
    m_.initial = q0;
    return std::move(m_);
  }

 private:
  int fresh(const char* construct, int rank) {
    return m_.add_state("q" + std::to_string(m_.states.size()) + "_" + construct, rank);
  }

  static Rhs params(int m) {
    Rhs ys;
    for (int i = 1; i <= m; ++i) ys.push_back(param(i));
    return ys;
  }

  static std::vector<Rhs> param_args(int m) {
    std::vector<Rhs> args;
    for (int i = 1; i <= m; ++i) args.push_back({param(i)});
    return args;
  }

  void translate(const Query& e, std::vector<std::string>& rho, int q, const std::string& ctx) {
    const int m = static_cast<int>(rho.size());
    switch (e.kind) {
      case Query::Kind::Sequence: {
        Rhs body;
        std::vector<int> parts;
        for (std::size_t i = 0; i < e.children.size(); ++i) {
          int qi = fresh("seq", m + 1);
          parts.push_back(qi);
          body.push_back(call(qi, 0, param_args(m)));
        }
        m_.add_any_rule(q, body);
        for (std::size_t i = 0; i < e.children.size(); ++i)
          translate(e.children[i], rho, parts[i], ctx);
        break;
      }
      case Query::Kind::Element: {
        if (e.children.empty()) {
          m_.add_any_rule(q, {out(e.name)});
          break;
        }
        int content = fresh("elem", m + 1);
        m_.add_any_rule(q, {out(e.name, {call(content, 0, param_args(m))})});
        if (e.children.size() == 1) {
          translate(e.children[0], rho, content, ctx);
        } else {
          Query seq;
          seq.kind = Query::Kind::Sequence;
          seq.children = e.children;
          translate(seq, rho, content, ctx);
        }
        break;
      }
      case Query::Kind::Text:
        m_.add_any_rule(q, {out_text(e.name)});
        break;
      case Query::Kind::PathExpr: {
        if (e.path.steps.empty()) {
          m_.add_any_rule(q, {param(lookup(rho, e.path.var))});
          break;
        }
        int emit = fresh("path", m + 2);
        m_.add_any_rule(emit, {param(m + 1)});
        gen_path_rules(e.path, ctx, q, emit, m);
        break;
      }
      case Query::Kind::For: {
        int body = fresh("for", m + 2);
        rho.push_back(e.name);
        translate(e.children[0], rho, body, e.name);
        rho.pop_back();
        gen_path_rules(e.path, ctx, q, body, m);
        break;
      }
      case Query::Kind::Let: {
        int bound = fresh("bound", m + 1);
        int body = fresh("let", m + 2);
        std::vector<Rhs> args = param_args(m);
        args.push_back({call(bound, 0, param_args(m))});
        m_.add_any_rule(q, {call(body, 0, std::move(args))});
        translate(e.children[0], rho, bound, ctx);
        rho.push_back(e.name);
        translate(e.children[1], rho, body, ctx);
        rho.pop_back();
        break;
      }
    }
  }

  static int lookup(const std::vector<std::string>& rho, const std::string& v) {
    for (int i = static_cast<int>(rho.size()); i >= 1; --i)
      if (rho[i - 1] == v) return i;
    throw CompileError({{{}, "unbound variable $" + v}});
  }

  static Guard guard_of(const LabelClass& c) {
    switch (c.kind) {
      case LabelClass::Kind::Name: return Guard::on(name_symbol(c.label));
      case LabelClass::Kind::TextSymbol: return Guard::on(text_symbol(c.label));
      case LabelClass::Kind::OtherText: return Guard::text_node();
      case LabelClass::Kind::OtherNode: return Guard::any();
    }
    return Guard::any();
  }

  // Emits the rules of one state, dropping symbol and text rules that
  // coincide with the rule that would apply in their absence.
  void emit_class_rules(int state, const std::vector<std::pair<LabelClass, Rhs>>& by_class,
                        Rhs eps_rhs) {
    const Rhs* fallback = nullptr;
    const Rhs* text = nullptr;
    for (const auto& [c, rhs] : by_class) {
      if (c.kind == LabelClass::Kind::OtherNode) fallback = &rhs;
      if (c.kind == LabelClass::Kind::OtherText) text = &rhs;
    }
    bool need_text = *text != *fallback;
    for (const auto& [c, rhs] : by_class) {
      if (c.kind == LabelClass::Kind::Name && rhs == *fallback) continue;
      if (c.kind == LabelClass::Kind::TextSymbol && rhs == (need_text ? *text : *fallback))
        continue;
      if (c.kind == LabelClass::Kind::OtherText && !need_text) continue;
      m_.add_rule(state, guard_of(c), rhs);
    }
    m_.add_rule(state, Guard::eps(), std::move(eps_rhs));
  }

  // Builds the right-hand side for one class, branching on the predicates of
  // the matched predicated steps (steps whose predicates are not listed in
  // `holds` count as failed).
  template <class Build>
  Rhs decide(PathDfa& dfa, const std::vector<Step>& steps, int s, const LabelClass& c,
             const std::vector<int>& pending, std::size_t k, std::vector<int>& holds,
             const Build& build) {
    if (k == pending.size()) return build(dfa.step(s, c, holds));
    int j = pending[k];
    holds.push_back(j);
    Rhs then_branch = decide(dfa, steps, s, c, pending, k + 1, holds, build);
    holds.pop_back();
    Rhs else_branch = decide(dfa, steps, s, c, pending, k + 1, holds, build);
    const std::vector<Predicate>& preds = steps[j].preds;
    Rhs result = std::move(then_branch);
    for (std::size_t r = preds.size(); r-- > 0;)
      result = conditional(predicate_state(preds[r]), std::move(result), else_branch);
    return result;
  }

  // Rules realizing: [[q]](f, u) = concatenation over the nodes t_i selected
  // by p of [[emit]](t_i s_i, u, t_i).
  void gen_path_rules(const Path& p, const std::string& ctx, int q, int emit, int m) {
    PathDfa dfa(std::vector<DStep>{});
    {
      std::vector<DStep> d;
      for (const Step& s : p.steps) d.push_back(to_dstep(s));
      dfa = PathDfa(std::move(d));
    }
    std::map<int, int> state_of;  // dfa state -> mft state
    std::vector<int> work;
    auto mft_state = [&](int s) {
      auto [it, fresh_state] = state_of.emplace(s, -1);
      if (fresh_state) {
        it->second = fresh("step", m + 1);
        work.push_back(s);
      }
      return it->second;
    };
    auto goto_rhs = [&](int s, int input) -> Rhs {
      if (dfa.is_dead(s)) return {};
      return {call(mft_state(s), input, param_args(m))};
    };
    if (p.var == kInputVar && ctx == kInputVar) {
      m_.add_any_rule(q, goto_rhs(dfa.document_start(), 0));
    } else {
      auto [down, right] = dfa.node_start();
      Rhs r = goto_rhs(down, 1);
      Rhs rr = goto_rhs(right, 2);
      r.insert(r.end(), rr.begin(), rr.end());
      m_.add_rule(q, Guard::any(), r);
      m_.add_rule(q, Guard::eps(), {});
    }
    auto build = [&](const PathDfa::Transition& t) {
      Rhs r;
      if (t.select) {
        std::vector<Rhs> args = param_args(m);
        args.push_back({copy_node({call(copy_, 1)})});
        r.push_back(call(emit, 0, std::move(args)));
      }
      Rhs d = goto_rhs(t.down, 1);
      Rhs n = goto_rhs(t.right, 2);
      r.insert(r.end(), d.begin(), d.end());
      r.insert(r.end(), n.begin(), n.end());
      return r;
    };
    while (!work.empty()) {
      int s = work.back();
      work.pop_back();
      int state = state_of.at(s);
      std::vector<std::pair<LabelClass, Rhs>> by_class;
      for (const LabelClass& c : dfa.classes()) {
        std::vector<int> holds;
        by_class.emplace_back(c, decide(dfa, p.steps, s, c, dfa.predicated_matches(s, c), 0,
                                        holds, build));
      }
      emit_class_rules(state, by_class, {});
    }
  }

  // A rank-3 state answering its first parameter if the predicate holds at
  // the current node and its second parameter otherwise.
  int predicate_state(const Predicate& pred) {
    if (auto it = pred_states_.find(&pred); it != pred_states_.end()) return it->second;
    int qp = fresh("pred", 3);
    pred_states_.emplace(&pred, qp);
    bool negate = pred.kind == Predicate::Kind::Empty;
    int yes = negate ? 2 : 1;
    int no = negate ? 1 : 2;

    PathDfa dfa(predicate_dsteps(pred));
    // Steps of the extended path; the appended comparison step has no
    // predicates of its own.
    std::vector<Step> steps = pred.path;
    while (steps.size() < dfa.steps().size()) steps.emplace_back();

    std::map<int, int> state_of;
    std::vector<int> work;
    auto mft_state = [&](int s) {
      auto [it, fresh_state] = state_of.emplace(s, -1);
      if (fresh_state) {
        it->second = fresh("test", 3);
        work.push_back(s);
      }
      return it->second;
    };
    // Exists-search over the region (down, right): y1 when found, else y2.
    auto search = [&](int down, int right, int found, int missing) -> Rhs {
      Rhs r = dfa.is_dead(right) ? Rhs{param(missing)}
                                 : Rhs{call(mft_state(right), 2, {{param(found)}, {param(missing)}})};
      if (dfa.is_dead(down)) return r;
      return {call(mft_state(down), 1, {{param(found)}, std::move(r)})};
    };
    if (dfa.steps().empty()) {
      m_.add_rule(qp, Guard::any(), {param(yes)});
    } else {
      auto [down, right] = dfa.node_start();
      m_.add_rule(qp, Guard::any(), search(down, right, yes, no));
    }
    m_.add_rule(qp, Guard::eps(), {param(2)});

    auto build = [&](const PathDfa::Transition& t) -> Rhs {
      if (t.select) return {param(1)};
      return search(t.down, t.right, 1, 2);
    };
    while (!work.empty()) {
      int s = work.back();
      work.pop_back();
      int state = state_of.at(s);
      std::vector<std::pair<LabelClass, Rhs>> by_class;
      for (const LabelClass& c : dfa.classes()) {
        std::vector<int> holds;
        by_class.emplace_back(c, decide(dfa, steps, s, c, dfa.predicated_matches(s, c), 0,
                                        holds, build));
      }
      emit_class_rules(state, by_class, {param(2)});
    }
    return qp;
  }

  Mft m_;
  int copy_ = 0;
  std::map<const Predicate*, int> pred_states_;
};

}  // namespace detail

/// Compiles a scoped MinXQuery program into an MFT with the same output on
/// every input forest. Throws CompileError on scoping violations.
inline Mft compile(const Query& q) {
  if (auto diags = check_scoping(q); !diags.empty()) throw CompileError(std::move(diags));
  return detail::Compiler().run(q);
}

}  // namespace xqmft
