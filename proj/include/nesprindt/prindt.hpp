#ifndef NESPRINDT_PRINDT_HPP
#define NESPRINDT_PRINDT_HPP

#include <optional>
#include <string>
#include <vector>

#include "nesprindt/ctree.hpp"
#include "nesprindt/dataset.hpp"
#include "nesprindt/sampling.hpp"

namespace nesprindt {

enum class Relation : std::uint8_t { InLevels, Le, Gt };

struct ForbiddenConjunct {
  std::string variable;
  Relation relation = Relation::InLevels;
  std::vector<std::string> levels;  // InLevels
  double value = 0.0;               // Le / Gt
};

// A tree is uninterpretable when some root-to-leaf path implies every conjunct
// of some combination.
struct ForbiddenCombination {
  std::vector<ForbiddenConjunct> conjuncts;
};

struct BalancedAccuracy {
  double ba = 0.0;
  double acc_large = 0.0;
  double acc_small = 0.0;
};

// acc_c = correct-in-class-c / size-of-class-c; ba is their mean. Throws
// DataError when the truth lacks a class.
BalancedAccuracy balanced_accuracy(const std::vector<ClassLabel>& predictions,
                                   const std::vector<ClassLabel>& truth);

// Predicts every row of `sample` and scores against the class column.
BalancedAccuracy score_tree(const Tree& t, const Dataset& d, const RowIndexSet& sample);

bool check_interpretable(const Tree& t, const Dataset& d,
                         const std::vector<ForbiddenCombination>& forbidden);

// Node-id path (root to leaf) witnessing the rejection, or nullopt when the
// tree is interpretable.
std::optional<std::vector<int>> find_forbidden_witness(
    const Tree& t, const Dataset& d, const std::vector<ForbiddenCombination>& forbidden);

struct ScoredTree {
  Tree tree;
  std::size_t outer = 0;
  std::size_t inner = 0;
  std::size_t percent_index = 0;
  double percent = 0.0;
  double ba_outer = 0.0;  // scored on all of under_out
  double acc_large_outer = 0.0;
  double acc_small_outer = 0.0;
  std::optional<BalancedAccuracy> full;  // filled by the outer loop

  std::string id() const {
    return "o" + std::to_string(outer) + "_i" + std::to_string(inner) + "_p" +
           std::to_string(percent_index);
  }
};

struct InnerConfig {
  std::vector<double> percents{0.06};
  std::size_t inner_reps = 999;
  TreeParams tree;
  std::vector<ForbiddenCombination> forbidden;
  std::vector<std::size_t> predictors;
};

struct InnerResult {
  std::vector<ScoredTree> ranked;  // ba_outer descending; ties earlier (inner, percent)
  std::size_t filtered = 0;        // dropped by the interpretability filter
};

// The inner loop: for every repetition and percent, draw
// under_in = undersample_class(under_out), grow a tree, drop it when
// uninterpretable, score survivors on all of under_out. Seed paths are
// outer_stream + ("inner", j) + ("pct", k); results are identical for any
// thread count. Throws EmptyResultError when everything is filtered.
InnerResult prindt_inner(const Dataset& d, const RowIndexSet& under_out, const InnerConfig& cfg,
                         const SeedStream& outer_stream, std::size_t outer_index,
                         std::size_t threads);

// First min(k, size) trees by the documented order (ba_outer descending,
// earlier (inner, percent) on ties).
std::vector<ScoredTree> top_k(const std::vector<ScoredTree>& scored, std::size_t k);

struct Ensemble {
  std::vector<const Tree*> members;  // non-empty
};

// Mean of the members' leaf probability pairs, argmax, ties to Small.
ClassProbs ensemble_probs(const Ensemble& e, const Dataset& d, RowIndex row);
ClassLabel ensemble_predict(const Ensemble& e, const Dataset& d, RowIndex row);
BalancedAccuracy score_ensemble(const Ensemble& e, const Dataset& d, const RowIndexSet& sample);

}  // namespace nesprindt

#endif
