#ifndef NESPRINDT_NESPRINDT_HPP
#define NESPRINDT_NESPRINDT_HPP

#include <optional>
#include <string>
#include <vector>

#include "nesprindt/ctree.hpp"
#include "nesprindt/dataset.hpp"
#include "nesprindt/prindt.hpp"
#include <json.hpp>

namespace nesprindt {

struct NestingSpec {
  std::string column;
  std::string small_level;
};

struct RunConfig {
  NestingSpec nesting;
  std::size_t outer_reps = 10;
  std::size_t inner_reps = 999;
  std::vector<double> percents{0.06};
  double alpha = 0.01;
  TreeParams tree;  // tree.alpha is kept in sync with alpha at run time
  std::size_t k_best = 3;
  std::uint64_t master_seed = 0;
  std::vector<ForbiddenCombination> forbidden;
  // Empty: all columns except the class column and the nesting column.
  std::vector<std::string> predictors;
};

struct BaRecord {
  std::size_t outer = 0;
  std::size_t inner = 0;
  std::size_t percent_index = 0;
  double percent = 0.0;
  double ba = 0.0;
};

struct EnsembleRecord {
  std::vector<std::string> member_ids;
  BalancedAccuracy score;
};

struct OuterRepReport {
  std::size_t index = 0;
  std::string under_out_digest;  // fnv1a64 over the index set, hex
  std::size_t under_out_n = 0;
  std::size_t under_out_large = 0;
  std::size_t under_out_small = 0;
  std::size_t filtered = 0;
  std::vector<ScoredTree> top;       // the kept k_best trees, ranked
  EnsembleRecord ensemble;           // strategy A: top-3 of this rep, scored on its under_out
};

struct ProbePart {
  std::size_t part = 0;       // 1-based
  std::size_t row_start = 0;  // 1-based ordinal positions within the large-level sequence
  std::size_t row_end = 0;
  double ba = 0.5;
  bool single_class = false;  // training set lacked a class; ba forced to 0.5
};

struct NesReport {
  RunConfig config;
  std::size_t n_rows = 0;
  std::size_t class_large = 0;
  std::size_t class_small = 0;

  std::vector<OuterRepReport> outer;
  std::vector<BaRecord> ba_outer_values;  // all surviving trees, (outer, inner, percent) order
  std::vector<BaRecord> ba_full_values;   // kept trees on the full sample, same order

  std::string best_by_outer_id;
  std::string best_by_full_id;
  bool best_identical = false;

  std::size_t ensemble_a_best_rep = 0;  // index into outer
  EnsembleRecord ensemble_b;            // strategy B: top-3 of the kept trees by ba_full

  std::optional<std::vector<ProbePart>> probe;
};

enum class BestCriterion { ByOuter, ByFull };

// Outer loop: outer_reps times draw under_out = undersample_level(...), run
// the inner loop on it, keep the top k_best trees; afterwards score every kept
// tree on the full dataset and assemble both ensemble strategies. Results are
// byte-identical for any thread count.
NesReport nesprindt_run(const Dataset& d, const RunConfig& cfg, std::size_t threads = 1);

// One tree per contiguous ordered part of the large-level rows, each joined
// with all small-level rows, scored on its own training set.
struct ProbeConfig {
  NestingSpec nesting;
  std::size_t parts = 8;
  TreeParams tree;
  std::vector<std::string> predictors;  // empty: same default as RunConfig
};
std::vector<ProbePart> heterogeneity_probe(const Dataset& d, const ProbeConfig& cfg);

// Argmax under the chosen criterion; earlier (outer, inner, percent) wins ties.
const ScoredTree& best_tree(const NesReport& report, BestCriterion criterion);

std::vector<std::size_t> resolve_predictors(const Dataset& d, const std::vector<std::string>& names,
                                            const std::string& nesting_column);

nlohmann::json report_to_json(const NesReport& report, const Dataset& d);

std::string digest_indices(const RowIndexSet& rows);

}  // namespace nesprindt

#endif
