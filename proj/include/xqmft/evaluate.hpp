#pragma once

// Reference (in-memory) semantics of transducers: forest semantics for any
// MFT, binary-tree semantics for tree-shaped transducers (MTT/TT).

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "xqmft/forest.hpp"
#include "xqmft/mft.hpp"

namespace xqmft {

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalOptions {
  /// Maximum number of consecutive calls on x0. Zero selects 10 * size(m).
  std::size_t stay_budget = 0;
  /// Maximum number of rule applications plus output nodes built. Zero means
  /// no limit.
  std::size_t max_work = 0;
};

inline std::size_t effective_budget(const Mft& m, const EvalOptions& opts) {
  return opts.stay_budget ? opts.stay_budget : 10 * size(m);
}

namespace detail {

class ForestEvaluator {
 public:
  using Args = std::vector<std::shared_ptr<const Forest>>;

  ForestEvaluator(const Mft& m, const EvalOptions& opts)
      : m_(m), index_(m), budget_(effective_budget(m, opts)), max_work_(opts.max_work) {}

  void call(int q, const Forest* f, std::size_t i, const Args& args, std::size_t stay,
            Forest& out) {
    work(1);
    if (stay > budget_)
      throw BudgetExceeded("stay-step budget exceeded in state " + m_.states[q].name);
    const Tree* head = i < f->size() ? &(*f)[i] : nullptr;
    int r = head ? index_.lookup(q, head->kind, head->label) : index_.eps(q);
    if (r < 0) throw std::logic_error("no applicable rule for state " + m_.states[q].name);
    Ctx ctx{f, i, head, &args, stay};
    rhs(m_.rules[r].rhs, ctx, out);
  }

 private:
  struct Ctx {
    const Forest* f;
    std::size_t i;
    const Tree* head;
    const Args* args;
    std::size_t stay;
  };

  void rhs(const Rhs& items, const Ctx& ctx, Forest& out) {
    for (const Item& it : items) {
      if (auto* o = std::get_if<OutNode>(&it.v)) {
        work(1);
        Tree t = o->copy_label ? Tree{ctx.head->label, ctx.head->kind, {}}
                               : Tree{o->label, o->kind, {}};
        rhs(o->children, ctx, t.children);
        out.push_back(std::move(t));
      } else if (auto* p = std::get_if<Param>(&it.v)) {
        const Forest& v = *(*ctx.args)[p->index - 1];
        if (max_work_) work(node_count(v));
        out.insert(out.end(), v.begin(), v.end());
      } else if (auto* c = std::get_if<Call>(&it.v)) {
        Args args;
        args.reserve(c->args.size());
        for (const Rhs& a : c->args) {
          if (a.size() == 1) {
            if (auto* p = std::get_if<Param>(&a[0].v)) {
              args.push_back((*ctx.args)[p->index - 1]);
              continue;
            }
          }
          auto v = std::make_shared<Forest>();
          rhs(a, ctx, *v);
          args.push_back(std::move(v));
        }
        switch (c->input) {
          case 0: call(c->state, ctx.f, ctx.i, args, ctx.stay + 1, out); break;
          case 1: call(c->state, &ctx.head->children, 0, args, 0, out); break;
          default: call(c->state, ctx.f, ctx.i + 1, args, 0, out); break;
        }
      }
    }
  }

  void work(std::size_t n) {
    work_ += n;
    if (max_work_ && work_ > max_work_) throw BudgetExceeded("work limit exceeded");
  }

  const Mft& m_;
  RuleIndex index_;
  std::size_t budget_;
  std::size_t max_work_;
  std::size_t work_ = 0;
};

// Parameters are passed by need.
class BinaryEvaluator {
 public:
  struct Thunk {
    const Item* item = nullptr;
    BinaryTree x0;
    std::shared_ptr<const std::vector<std::shared_ptr<Thunk>>> args;
    std::size_t stay = 0;
    BinaryTree value;
    bool done = false;
  };
  using ThunkPtr = std::shared_ptr<Thunk>;
  using Args = std::shared_ptr<const std::vector<ThunkPtr>>;

  BinaryEvaluator(const Mft& m, const EvalOptions& opts)
      : m_(m), index_(m), budget_(effective_budget(m, opts)), max_work_(opts.max_work) {}

  BinaryTree call(int q, const BinaryTree& t, Args args, std::size_t stay) {
    work();
    if (stay > budget_)
      throw BudgetExceeded("stay-step budget exceeded in state " + m_.states[q].name);
    int r = t ? index_.lookup(q, t->kind, t->label) : index_.eps(q);
    if (r < 0) throw std::logic_error("no applicable rule for state " + m_.states[q].name);
    const Rhs& body = m_.rules[r].rhs;
    Ctx ctx{&t, &args, stay};
    return body.empty() ? nullptr : item(body[0], ctx);
  }

 private:
  struct Ctx {
    const BinaryTree* x0;
    const Args* args;
    std::size_t stay;
  };

  BinaryTree force(Thunk& t) {
    if (!t.done) {
      Ctx ctx{&t.x0, &t.args, t.stay};
      t.value = item(*t.item, ctx);
      t.done = true;
      t.x0.reset();
      t.args.reset();
    }
    return t.value;
  }

  BinaryTree item(const Item& it, const Ctx& ctx) {
    if (auto* o = std::get_if<OutNode>(&it.v)) {
      work();
      BinaryTree l = item(o->children[0], ctx);
      BinaryTree r = item(o->children[1], ctx);
      const BinaryTree& head = *ctx.x0;
      return o->copy_label ? binary(head->label, head->kind, std::move(l), std::move(r))
                           : binary(o->label, o->kind, std::move(l), std::move(r));
    }
    if (auto* p = std::get_if<Param>(&it.v)) return force(*(**ctx.args)[p->index - 1]);
    if (auto* c = std::get_if<Call>(&it.v)) {
      auto args = std::make_shared<std::vector<ThunkPtr>>();
      args->reserve(c->args.size());
      for (const Rhs& a : c->args) {
        if (a.empty()) {
          args->push_back(std::make_shared<Thunk>(Thunk{nullptr, {}, {}, 0, nullptr, true}));
        } else if (auto* p = std::get_if<Param>(&a[0].v)) {
          args->push_back((**ctx.args)[p->index - 1]);
        } else {
          args->push_back(std::make_shared<Thunk>(Thunk{&a[0], *ctx.x0, *ctx.args, ctx.stay}));
        }
      }
      const BinaryTree& x0 = *ctx.x0;
      switch (c->input) {
        case 0: return call(c->state, x0, std::move(args), ctx.stay + 1);
        case 1: return call(c->state, x0->left, std::move(args), 0);
        default: return call(c->state, x0->right, std::move(args), 0);
      }
    }
    return nullptr;
  }

  void work() {
    if (max_work_ && ++work_ > max_work_) throw BudgetExceeded("work limit exceeded");
  }

  const Mft& m_;
  RuleIndex index_;
  std::size_t budget_;
  std::size_t max_work_;
  std::size_t work_ = 0;
};

}  // namespace detail

/// Forest semantics: the output of the initial state on `input`.
inline Forest evaluate(const Mft& m, const Forest& input, const EvalOptions& opts = {}) {
  detail::ForestEvaluator ev(m, opts);
  Forest out;
  ev.call(m.initial, &input, 0, {}, 0, out);
  return out;
}

/// Binary-tree semantics of a tree-shaped transducer. The input is matched
/// as s(x1, x2); right-hand sides build binary trees directly.
inline BinaryTree evaluate_binary(const Mft& m, const BinaryTree& input,
                                  const EvalOptions& opts = {}) {
  if (!is_tree_shaped(m))
    throw std::invalid_argument("evaluate_binary: right-hand sides are not tree-shaped");
  detail::BinaryEvaluator ev(m, opts);
  auto none = std::make_shared<std::vector<detail::BinaryEvaluator::ThunkPtr>>();
  return ev.call(m.initial, input, std::move(none), 0);
}

/// Binary semantics of an arbitrary MFT: fcns of its forest semantics.
inline BinaryTree evaluate_as_binary(const Mft& m, const BinaryTree& input,
                                     const EvalOptions& opts = {}) {
  return fcns(evaluate(m, fcns_inverse(input), opts));
}

}  // namespace xqmft
