#include "nesprindt/prindt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nesprindt/parallel.hpp"

namespace nesprindt {

BalancedAccuracy balanced_accuracy(const std::vector<ClassLabel>& predictions,
                                   const std::vector<ClassLabel>& truth) {
  if (predictions.size() != truth.size() || truth.empty())
    throw DataError("balanced_accuracy: prediction/truth length mismatch");
  std::size_t n_large = 0, n_small = 0, correct_large = 0, correct_small = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == ClassLabel::Small) {
      ++n_small;
      correct_small += predictions[i] == ClassLabel::Small;
    } else {
      ++n_large;
      correct_large += predictions[i] == ClassLabel::Large;
    }
  }
  if (n_large == 0 || n_small == 0)
    throw DataError("balanced_accuracy: truth lacks a class, ba undefined");
  BalancedAccuracy out;
  out.acc_large = static_cast<double>(correct_large) / static_cast<double>(n_large);
  out.acc_small = static_cast<double>(correct_small) / static_cast<double>(n_small);
  out.ba = (out.acc_large + out.acc_small) / 2.0;
  return out;
}

BalancedAccuracy score_tree(const Tree& t, const Dataset& d, const RowIndexSet& sample) {
  std::size_t n_large = 0, n_small = 0, correct_large = 0, correct_small = 0;
  for (RowIndex r : sample) {
    const ClassLabel predicted = predict_label(t, d, r);
    if (d.class_of(r) == ClassLabel::Small) {
      ++n_small;
      correct_small += predicted == ClassLabel::Small;
    } else {
      ++n_large;
      correct_large += predicted == ClassLabel::Large;
    }
  }
  if (n_large == 0 || n_small == 0)
    throw DataError("score_tree: sample lacks a class, ba undefined");
  BalancedAccuracy out;
  out.acc_large = static_cast<double>(correct_large) / static_cast<double>(n_large);
  out.acc_small = static_cast<double>(correct_small) / static_cast<double>(n_small);
  out.ba = (out.acc_large + out.acc_small) / 2.0;
  return out;
}

namespace {

// Accumulated constraints along a path. Categorical columns start at the full
// vocabulary; numeric columns at (-inf, +inf]. Right branches of categorical
// splits exclude the left subset from the vocabulary (training semantics; the
// prediction-time unseen-level fallback is ignored here).
struct PathState {
  struct CatState {
    std::vector<std::uint8_t> allowed;  // by level code
  };
  struct NumState {
    double lower = -std::numeric_limits<double>::infinity();  // value > lower
    double upper = std::numeric_limits<double>::infinity();   // value <= upper
  };
  std::vector<CatState> cat;
  std::vector<NumState> num;
};

bool conjunct_implied(const PathState& state, const Dataset& d, const ForbiddenConjunct& conjunct) {
  const auto column = d.find_column(conjunct.variable);
  if (!column) return false;
  if (conjunct.relation == Relation::InLevels) {
    if (!d.is_categorical(*column)) return false;
    std::vector<std::uint8_t> member(d.schema()[*column].levels.size(), 0);
    for (const auto& lev : conjunct.levels) {
      const auto code = d.level_code(*column, lev);
      member[static_cast<std::size_t>(code)] = 1;
    }
    const auto& allowed = state.cat[*column].allowed;
    for (std::size_t code = 0; code < allowed.size(); ++code)
      if (allowed[code] && !member[code]) return false;  // not a subset
    return true;
  }
  if (d.is_categorical(*column)) return false;
  const auto& interval = state.num[*column];
  if (conjunct.relation == Relation::Le) return interval.upper <= conjunct.value;
  return interval.lower >= conjunct.value;  // Gt
}

bool path_implies_combination(const PathState& state, const Dataset& d,
                              const ForbiddenCombination& combination) {
  for (const auto& conjunct : combination.conjuncts)
    if (!conjunct_implied(state, d, conjunct)) return false;
  return !combination.conjuncts.empty();
}

struct WitnessSearch {
  const Tree& tree;
  const Dataset& d;
  const std::vector<ForbiddenCombination>& forbidden;
  std::vector<int> path;
  std::optional<std::vector<int>> witness;

  void visit(std::size_t index, PathState& state) {
    if (witness) return;
    const TreeNode& node = tree.nodes[index];
    path.push_back(node.id);
    if (node.is_leaf()) {
      for (const auto& combination : forbidden) {
        if (path_implies_combination(state, d, combination)) {
          witness = path;
          break;
        }
      }
    } else {
      const Split& split = *node.split;
      if (split.numeric) {
        const PathState::NumState saved = state.num[split.column];
        state.num[split.column].upper = std::min(saved.upper, split.threshold);
        visit(static_cast<std::size_t>(node.left), state);
        state.num[split.column] = saved;
        state.num[split.column].lower = std::max(saved.lower, split.threshold);
        visit(static_cast<std::size_t>(node.right), state);
        state.num[split.column] = saved;
      } else {
        const std::vector<std::uint8_t> saved = state.cat[split.column].allowed;
        auto& allowed = state.cat[split.column].allowed;
        for (std::size_t code = 0; code < allowed.size(); ++code)
          allowed[code] = saved[code] && split.left_mask[code];
        visit(static_cast<std::size_t>(node.left), state);
        for (std::size_t code = 0; code < allowed.size(); ++code)
          allowed[code] = saved[code] && !split.left_mask[code];
        visit(static_cast<std::size_t>(node.right), state);
        allowed = saved;
      }
    }
    path.pop_back();
  }
};

}  // namespace

std::optional<std::vector<int>> find_forbidden_witness(
    const Tree& t, const Dataset& d, const std::vector<ForbiddenCombination>& forbidden) {
  if (forbidden.empty()) return std::nullopt;
  PathState state;
  state.cat.resize(d.n_columns());
  state.num.resize(d.n_columns());
  for (std::size_t c = 0; c < d.n_columns(); ++c)
    if (d.is_categorical(c)) state.cat[c].allowed.assign(d.schema()[c].levels.size(), 1);
  WitnessSearch search{t, d, forbidden, {}, std::nullopt};
  search.visit(0, state);
  return search.witness;
}

bool check_interpretable(const Tree& t, const Dataset& d,
                         const std::vector<ForbiddenCombination>& forbidden) {
  return !find_forbidden_witness(t, d, forbidden).has_value();
}

InnerResult prindt_inner(const Dataset& d, const RowIndexSet& under_out, const InnerConfig& cfg,
                         const SeedStream& outer_stream, std::size_t outer_index,
                         std::size_t threads) {
  const auto [large_in_out, small_in_out] = class_counts(d, under_out);
  if (large_in_out == 0 || small_in_out == 0)
    throw DataError("inner loop requires both classes in under_out");

  const std::size_t n_percents = cfg.percents.size();
  const std::size_t n_jobs = cfg.inner_reps * n_percents;
  std::vector<std::optional<ScoredTree>> slots(n_jobs);
  std::vector<std::uint8_t> filtered_flags(n_jobs, 0);

  parallel_for(n_jobs, threads, [&](std::size_t job) {
    const std::size_t rep = job / n_percents;
    const std::size_t pidx = job % n_percents;
    SeedStream rng = outer_stream.derive("inner", rep).derive("pct", pidx);
    const UndersampleSpec spec{cfg.percents[pidx], rep};
    const RowIndexSet under_in = undersample_class(d, under_out, spec, rng);
    Tree tree = grow_tree(d, under_in, cfg.tree, cfg.predictors);
    if (!check_interpretable(tree, d, cfg.forbidden)) {
      filtered_flags[job] = 1;
      return;
    }
    const BalancedAccuracy score = score_tree(tree, d, under_out);
    ScoredTree st;
    st.tree = std::move(tree);
    st.outer = outer_index;
    st.inner = rep;
    st.percent_index = pidx;
    st.percent = cfg.percents[pidx];
    st.ba_outer = score.ba;
    st.acc_large_outer = score.acc_large;
    st.acc_small_outer = score.acc_small;
    slots[job] = std::move(st);
  });

  InnerResult result;
  for (std::size_t job = 0; job < n_jobs; ++job) {
    if (slots[job])
      result.ranked.push_back(std::move(*slots[job]));
    else if (filtered_flags[job])
      ++result.filtered;
  }
  if (result.ranked.empty())
    throw EmptyResultError("outer repetition " + std::to_string(outer_index) +
                           ": every tree was rejected by the interpretability filter (" +
                           std::to_string(result.filtered) + " candidates)");

  std::sort(result.ranked.begin(), result.ranked.end(), [](const ScoredTree& a, const ScoredTree& b) {
    if (a.ba_outer != b.ba_outer) return a.ba_outer > b.ba_outer;
    if (a.inner != b.inner) return a.inner < b.inner;
    return a.percent_index < b.percent_index;
  });
  return result;
}

std::vector<ScoredTree> top_k(const std::vector<ScoredTree>& scored, std::size_t k) {
  if (k < 1) throw ConfigError("top_k needs k >= 1");
  std::vector<const ScoredTree*> order;
  order.reserve(scored.size());
  for (const auto& s : scored) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const ScoredTree* a, const ScoredTree* b) {
    if (a->ba_outer != b->ba_outer) return a->ba_outer > b->ba_outer;
    if (a->outer != b->outer) return a->outer < b->outer;
    if (a->inner != b->inner) return a->inner < b->inner;
    return a->percent_index < b->percent_index;
  });
  std::vector<ScoredTree> out;
  const std::size_t take = std::min(k, order.size());
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(*order[i]);
  return out;
}

ClassProbs ensemble_probs(const Ensemble& e, const Dataset& d, RowIndex row) {
  if (e.members.empty()) throw ConfigError("ensemble has no members");
  double sum_large = 0.0, sum_small = 0.0;
  for (const Tree* t : e.members) {
    const ClassProbs p = predict_probs(*t, d, row);
    sum_large += p.large;
    sum_small += p.small;
  }
  const auto k = static_cast<double>(e.members.size());
  return {sum_large / k, sum_small / k};
}

ClassLabel ensemble_predict(const Ensemble& e, const Dataset& d, RowIndex row) {
  const ClassProbs p = ensemble_probs(e, d, row);
  return p.small >= p.large ? ClassLabel::Small : ClassLabel::Large;
}

BalancedAccuracy score_ensemble(const Ensemble& e, const Dataset& d, const RowIndexSet& sample) {
  std::size_t n_large = 0, n_small = 0, correct_large = 0, correct_small = 0;
  for (RowIndex r : sample) {
    const ClassLabel predicted = ensemble_predict(e, d, r);
    if (d.class_of(r) == ClassLabel::Small) {
      ++n_small;
      correct_small += predicted == ClassLabel::Small;
    } else {
      ++n_large;
      correct_large += predicted == ClassLabel::Large;
    }
  }
  if (n_large == 0 || n_small == 0)
    throw DataError("score_ensemble: sample lacks a class, ba undefined");
  BalancedAccuracy out;
  out.acc_large = static_cast<double>(correct_large) / static_cast<double>(n_large);
  out.acc_small = static_cast<double>(correct_small) / static_cast<double>(n_small);
  out.ba = (out.acc_large + out.acc_small) / 2.0;
  return out;
}

}  // namespace nesprindt
