#pragma once

// Pipeline oracle for the composition constructions: running the composed
// transducer must equal running the two operands one after the other.

#include <string>
#include <vector>

#include "support/random.hpp"

namespace xqmft::testing {

struct Construction {
  const char* name;
  TransducerClass first, second;
  Mft (*compose)(const Mft&, const Mft&, CompositionReport*);
  bool first_is_tree;     // first operand runs with binary semantics
  bool second_is_tree;    // second operand runs with binary semantics
};

inline const std::vector<Construction>& constructions() {
  using TC = TransducerClass;
  static const std::vector<Construction> all = {
      {"tt-tt", TC::TT, TC::TT, compose_tt_tt, true, true},
      {"mtt-tt", TC::MTT, TC::TT, compose_mtt_tt, true, true},
      {"tt-mtt", TC::TT, TC::MTT, compose_tt_mtt, true, true},
      {"mtt-ft", TC::MTT, TC::FT, compose_mtt_ft, true, false},
      {"tt-ft", TC::TT, TC::FT, compose_tt_ft, true, false},
      {"ft-tt", TC::FT, TC::TT, compose_ft_tt, false, true},
      {"ft-ft", TC::FT, TC::FT, compose_ft_ft, false, false},
  };
  return all;
}

inline BinaryTree run_side(const Mft& m, const BinaryTree& t, bool tree, const EvalOptions& o) {
  return tree ? evaluate_binary(m, t, o) : evaluate_as_binary(m, t, o);
}

// False once more than `budget` nodes are visited; shared subtrees count again.
inline bool small_enough(const BinaryTree& b, std::size_t& budget) {
  if (!b) return true;
  if (budget == 0) return false;
  --budget;
  return small_enough(b->left, budget) && small_enough(b->right, budget);
}

enum class PipelineResult { Equal, Skipped, Different };

struct PipelineCase {
  PipelineResult result = PipelineResult::Skipped;
  std::string detail;
};

/// Compares composed and sequential runs on one input. Inputs whose
/// sequential run exceeds the small budget are skipped.
inline PipelineCase check_pipeline(const Construction& c, const Mft& m1, const Mft& m2,
                                   const Mft& composed, const BinaryTree& t) {
  EvalOptions small, large;
  small.max_work = 5000;
  large.max_work = 10000000;
  BinaryTree want;
  try {
    BinaryTree mid = run_side(m1, t, c.first_is_tree, small);
    std::size_t b = 3000;
    if (!small_enough(mid, b)) return {};
    want = run_side(m2, mid, c.second_is_tree, small);
    b = 3000;
    if (!small_enough(want, b)) return {};
  } catch (const BudgetExceeded&) {
    return {};
  }
  BinaryTree got;
  try {
    got = run_side(composed, t, c.second_is_tree, large);
  } catch (const std::exception& e) {
    return {PipelineResult::Different, std::string("composed run failed: ") + e.what()};
  }
  if (equal(got, want)) return {PipelineResult::Equal, {}};
  return {PipelineResult::Different, "input " + print_binary(t) + "\nwant " + print_binary(want) +
                                         "\ngot  " + print_binary(got)};
}

struct SuiteResult {
  int pairs = 0;
  int skipped = 0;
  std::string failure;
};

/// Draws random operand pairs until `pairs` of them were checked on four
/// inputs each without skipping.
inline SuiteResult pipeline_suite(const Construction& c, Rng& rng, int pairs) {
  SuiteResult r;
  for (int i = 0; r.pairs < pairs && i < 20 * pairs; ++i) {
    MftSpec s1, s2;
    s1.cls = c.first;
    s2.cls = c.second;
    s1.states = uniform(rng, 1, 3);
    s2.states = uniform(rng, 1, 3);
    s1.max_depth = s2.max_depth = 2;
    Mft m1 = random_mft(rng, s1), m2 = random_mft(rng, s2);
    Mft m = c.compose(m1, m2, nullptr);
    if (auto errs = validate(m); !errs.empty()) {
      r.failure = std::string(c.name) + ": invalid result: " + errs[0];
      return r;
    }
    bool all = true;
    for (int d = 0; d < 4; ++d) {
      BinaryTree t = random_binary(rng, {"a", "b", "c"}, uniform(rng, 0, 7));
      PipelineCase pc = check_pipeline(c, m1, m2, m, t);
      if (pc.result == PipelineResult::Different) {
        r.failure = std::string(c.name) + "\n" + print_mft(m1) + "--\n" + print_mft(m2) + pc.detail;
        return r;
      }
      all &= pc.result == PipelineResult::Equal;
    }
    if (all)
      ++r.pairs;
    else
      ++r.skipped;
  }
  return r;
}

}  // namespace xqmft::testing
