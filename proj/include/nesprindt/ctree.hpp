#ifndef NESPRINDT_CTREE_HPP
#define NESPRINDT_CTREE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nesprindt/common.hpp"
#include "nesprindt/dataset.hpp"
#include <json.hpp>

namespace nesprindt {

struct TreeParams {
  double alpha = 0.01;
  std::size_t min_split = 20;
  std::size_t min_leaf = 7;
  std::size_t max_depth = 0;  // 0 = unbounded
};

struct VariableTest {
  std::size_t column = 0;
  double statistic = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;  // Bonferroni: min(1, m * p_raw) over non-constant variables
  bool constant = false;    // excluded from the adjustment family
};

struct Split {
  std::size_t column = 0;
  bool numeric = false;
  double threshold = 0.0;  // numeric: left iff x <= threshold (midpoint of adjacent values)
  // Categorical: per level code of the column, left iff left_mask[code].
  // observed_mask marks levels seen in the node; unseen levels fall back to
  // the larger child at prediction time.
  std::vector<std::uint8_t> left_mask;
  std::vector<std::uint8_t> observed_mask;
};

struct TreeNode {
  int id = 0;  // preorder, root = 1
  std::int64_t count_large = 0;
  std::int64_t count_small = 0;
  int left = -1;  // index into Tree::nodes, -1 for leaves
  int right = -1;
  std::optional<Split> split;
  double statistic = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;

  bool is_leaf() const { return left < 0; }
  std::int64_t n() const { return count_large + count_small; }
  double prob_small() const { return static_cast<double>(count_small) / static_cast<double>(n()); }
  double prob_large() const { return static_cast<double>(count_large) / static_cast<double>(n()); }
};

struct Tree {
  std::vector<TreeNode> nodes;  // preorder; nodes[id - 1] has that id
  TreeParams params;

  const TreeNode& root() const { return nodes.front(); }
};

struct ClassProbs {
  double large = 0.0;
  double small = 0.0;
};

// Single-variable independence test inside a node. Categorical: Pearson chi2
// on the level-by-class table (zero levels dropped), exact permutation p for
// n <= 16, chi2 tail above. Numeric: two-sample rank sum, exact null for
// tie-free n <= 24, normal approximation with tie correction above. Constant
// variables report p = 1 and are excluded from the Bonferroni family.
VariableTest independence_test(const Dataset& d, const RowIndexSet& within, std::size_t column);

// Tests for all predictors with p_adjusted = min(1, m * p_raw), m counting the
// non-constant variables in the node.
std::vector<VariableTest> test_battery(const Dataset& d, const RowIndexSet& within,
                                       const std::vector<std::size_t>& predictors);

// Column of the most significant admissible test, or nullopt when no
// p_adjusted clears alpha. Ties: larger statistic, then schema column order.
std::optional<std::size_t> select_split_variable(const std::vector<VariableTest>& tests,
                                                 double alpha);

// Best binary split of `column` by the 2x2 chi2 of the induced split-by-class
// table; nullopt when no candidate leaves both children >= min_leaf.
std::optional<Split> find_split(const Dataset& d, const RowIndexSet& within, std::size_t column,
                                std::size_t min_leaf);

Tree grow_tree(const Dataset& d, const RowIndexSet& within, const TreeParams& params,
               const std::vector<std::size_t>& predictors);

const TreeNode& route_to_leaf(const Tree& t, const Dataset& d, RowIndex row);
ClassProbs predict_probs(const Tree& t, const Dataset& d, RowIndex row);
ClassLabel predict_label(const Tree& t, const Dataset& d, RowIndex row);  // ties go to Small

// Name-resolved tree document: the serialization and rendering form. Trees
// rendered from a fit and from a deserialized report byte-match because both
// go through this structure.
struct TreeDocNode {
  int id = 0;
  std::int64_t count_large = 0;
  std::int64_t count_small = 0;
  int left = -1;  // node ids, -1 for leaves
  int right = -1;
  std::string variable;  // empty for leaves
  bool numeric_split = false;
  double threshold = 0.0;
  std::vector<std::string> left_levels;
  std::vector<std::string> observed_levels;
  double statistic = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
};

struct TreeDoc {
  std::vector<TreeDocNode> nodes;
  TreeParams params;
};

TreeDoc tree_doc(const Tree& t, const Dataset& d);
nlohmann::json tree_doc_to_json(const TreeDoc& doc);
TreeDoc tree_doc_from_json(const nlohmann::json& j);
Tree tree_from_doc(const TreeDoc& doc, const Dataset& d);

std::string render_tree(const TreeDoc& doc);
std::string render_tree(const Tree& t, const Dataset& d);

}  // namespace nesprindt

#endif
