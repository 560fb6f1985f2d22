#include "nesprindt/ctree.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "nesprindt/stats.hpp"

namespace nesprindt {

namespace {

constexpr std::size_t kCategoricalExactLimit = 16;
constexpr std::size_t kRankSumExactLimit = 24;
constexpr std::size_t kExhaustiveSubsetLimit = 12;

ContingencyTable node_table(const Dataset& d, const RowIndexSet& within, std::size_t column) {
  const auto& codes = d.cat_column(column);
  const auto& class_codes = d.cat_column(d.class_column());
  const std::size_t n_levels = d.schema()[column].levels.size();
  ContingencyTable table(n_levels, {0, 0});
  for (RowIndex r : within) {
    const int cls = class_codes[r] == d.small_code() ? 1 : 0;
    ++table[static_cast<std::size_t>(codes[r])][cls];
  }
  // Levels with zero rows are dropped from the test.
  ContingencyTable observed;
  for (const auto& row : table)
    if (row[0] + row[1] > 0) observed.push_back(row);
  return observed;
}

}  // namespace

VariableTest independence_test(const Dataset& d, const RowIndexSet& within, std::size_t column) {
  VariableTest test;
  test.column = column;

  if (d.is_categorical(column)) {
    const ContingencyTable table = node_table(d, within, column);
    if (table.size() < 2) {
      test.constant = true;
      return test;
    }
    const Chi2Stat chi2 = pearson_chi2(table);
    test.statistic = chi2.statistic;
    if (within.size() <= kCategoricalExactLimit)
      test.p_raw = chi2_permutation_p(table);
    else
      test.p_raw = chi_squared_tail(chi2.statistic, chi2.df);
  } else {
    std::vector<double> values;
    std::vector<bool> in_small;
    values.reserve(within.size());
    in_small.reserve(within.size());
    const auto& column_values = d.num_column(column);
    const auto& class_codes = d.cat_column(d.class_column());
    for (RowIndex r : within) {
      values.push_back(column_values[r]);
      in_small.push_back(class_codes[r] == d.small_code());
    }
    const RankSumStat rs = rank_sum_test(values, in_small, kRankSumExactLimit);
    if (rs.constant) {
      test.constant = true;
      return test;
    }
    test.statistic = rs.statistic;
    test.p_raw = rs.p;
  }
  test.p_adjusted = test.p_raw;
  return test;
}

std::vector<VariableTest> test_battery(const Dataset& d, const RowIndexSet& within,
                                       const std::vector<std::size_t>& predictors) {
  std::vector<VariableTest> tests;
  tests.reserve(predictors.size());
  std::size_t family = 0;
  for (std::size_t column : predictors) {
    tests.push_back(independence_test(d, within, column));
    if (!tests.back().constant) ++family;
  }
  for (auto& t : tests)
    t.p_adjusted = t.constant ? 1.0 : std::min(1.0, static_cast<double>(family) * t.p_raw);
  return tests;
}

std::optional<std::size_t> select_split_variable(const std::vector<VariableTest>& tests,
                                                 double alpha) {
  const VariableTest* best = nullptr;
  for (const auto& t : tests) {
    if (t.constant) continue;
    if (best == nullptr || t.p_adjusted < best->p_adjusted ||
        (t.p_adjusted == best->p_adjusted &&
         (t.statistic > best->statistic ||
          (t.statistic == best->statistic && t.column < best->column))))
      best = &t;
  }
  if (best == nullptr || best->p_adjusted > alpha) return std::nullopt;
  return best->column;
}

namespace {

double two_by_two_chi2(std::int64_t left_large, std::int64_t left_small, std::int64_t right_large,
                       std::int64_t right_small) {
  return pearson_chi2({{left_large, left_small}, {right_large, right_small}}).statistic;
}

std::optional<Split> find_numeric_split(const Dataset& d, const RowIndexSet& within,
                                        std::size_t column, std::size_t min_leaf) {
  const auto& values = d.num_column(column);
  const auto& class_codes = d.cat_column(d.class_column());

  std::vector<RowIndex> sorted(within);
  std::sort(sorted.begin(), sorted.end(),
            [&](RowIndex a, RowIndex b) { return values[a] < values[b]; });

  std::int64_t total_small = 0;
  for (RowIndex r : sorted) total_small += class_codes[r] == d.small_code();
  const auto total = static_cast<std::int64_t>(sorted.size());
  const std::int64_t total_large = total - total_small;

  double best_stat = -1.0;
  double best_threshold = 0.0;
  std::int64_t left_small = 0;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    left_small += class_codes[sorted[i - 1]] == d.small_code();
    if (values[sorted[i - 1]] == values[sorted[i]]) continue;  // not a boundary
    const auto left_n = static_cast<std::int64_t>(i);
    const std::int64_t right_n = total - left_n;
    if (left_n < static_cast<std::int64_t>(min_leaf) || right_n < static_cast<std::int64_t>(min_leaf))
      continue;
    const double stat = two_by_two_chi2(left_n - left_small, left_small,
                                        total_large - (left_n - left_small),
                                        total_small - left_small);
    if (stat > best_stat) {
      best_stat = stat;
      best_threshold = 0.5 * (values[sorted[i - 1]] + values[sorted[i]]);
    }
  }
  if (best_stat < 0.0) return std::nullopt;

  Split split;
  split.column = column;
  split.numeric = true;
  split.threshold = best_threshold;
  return split;
}

std::optional<Split> find_categorical_split(const Dataset& d, const RowIndexSet& within,
                                            std::size_t column, std::size_t min_leaf) {
  const auto& codes = d.cat_column(column);
  const auto& class_codes = d.cat_column(d.class_column());
  const std::size_t n_levels = d.schema()[column].levels.size();

  std::vector<std::int64_t> level_large(n_levels, 0), level_small(n_levels, 0);
  for (RowIndex r : within) {
    if (class_codes[r] == d.small_code())
      ++level_small[static_cast<std::size_t>(codes[r])];
    else
      ++level_large[static_cast<std::size_t>(codes[r])];
  }

  std::vector<std::size_t> observed;  // level codes present in the node
  std::int64_t total_large = 0, total_small = 0;
  for (std::size_t lev = 0; lev < n_levels; ++lev) {
    if (level_large[lev] + level_small[lev] > 0) {
      observed.push_back(lev);
      total_large += level_large[lev];
      total_small += level_small[lev];
    }
  }
  if (observed.size() < 2) return std::nullopt;

  double best_stat = -1.0;
  std::vector<std::size_t> best_left;

  auto consider = [&](const std::vector<std::size_t>& left_levels) {
    std::int64_t ll = 0, ls = 0;
    for (std::size_t lev : left_levels) {
      ll += level_large[lev];
      ls += level_small[lev];
    }
    const std::int64_t left_n = ll + ls;
    const std::int64_t right_n = total_large + total_small - left_n;
    if (left_n < static_cast<std::int64_t>(min_leaf) || right_n < static_cast<std::int64_t>(min_leaf))
      return;
    const double stat = two_by_two_chi2(ll, ls, total_large - ll, total_small - ls);
    if (stat > best_stat) {
      best_stat = stat;
      best_left = left_levels;
    }
  };

  if (observed.size() <= kExhaustiveSubsetLimit) {
    // All proper non-empty subsets, deduplicated against complements by
    // pinning the last observed level to the right side.
    const std::size_t free_levels = observed.size() - 1;
    for (std::uint64_t mask = 1; mask < (1ULL << free_levels); ++mask) {
      std::vector<std::size_t> left;
      for (std::size_t b = 0; b < free_levels; ++b)
        if (mask & (1ULL << b)) left.push_back(observed[b]);
      consider(left);
    }
  } else {
    // Sort by small-class proportion (descending; ties by level code) and
    // scan prefix subsets.
    std::vector<std::size_t> sorted(observed);
    std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      const double pa = static_cast<double>(level_small[a]) /
                        static_cast<double>(level_small[a] + level_large[a]);
      const double pb = static_cast<double>(level_small[b]) /
                        static_cast<double>(level_small[b] + level_large[b]);
      if (pa != pb) return pa > pb;
      return a < b;
    });
    std::vector<std::size_t> prefix;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      prefix.push_back(sorted[i]);
      consider(prefix);
    }
  }
  if (best_stat < 0.0) return std::nullopt;

  Split split;
  split.column = column;
  split.numeric = false;
  split.left_mask.assign(n_levels, 0);
  split.observed_mask.assign(n_levels, 0);
  for (std::size_t lev : observed) split.observed_mask[lev] = 1;
  for (std::size_t lev : best_left) split.left_mask[lev] = 1;
  return split;
}

}  // namespace

std::optional<Split> find_split(const Dataset& d, const RowIndexSet& within, std::size_t column,
                                std::size_t min_leaf) {
  if (d.is_categorical(column)) return find_categorical_split(d, within, column, min_leaf);
  return find_numeric_split(d, within, column, min_leaf);
}

namespace {

bool goes_left(const Split& split, const Dataset& d, RowIndex row, std::int64_t left_n,
               std::int64_t right_n) {
  if (split.numeric) return d.num_value(split.column, row) <= split.threshold;
  const auto code = static_cast<std::size_t>(d.cat_code(split.column, row));
  if (code < split.observed_mask.size() && split.observed_mask[code])
    return split.left_mask[code] != 0;
  // Level unseen in this node's training rows: fall back to the larger child.
  return left_n >= right_n;
}

struct TreeGrower {
  const Dataset& d;
  const TreeParams& params;
  const std::vector<std::size_t>& predictors;
  std::vector<TreeNode> nodes;

  int grow(const RowIndexSet& rows, std::size_t depth) {
    const int index = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[index].id = index + 1;

    std::int64_t small = 0;
    const auto& class_codes = d.cat_column(d.class_column());
    for (RowIndex r : rows) small += class_codes[r] == d.small_code();
    nodes[index].count_small = small;
    nodes[index].count_large = static_cast<std::int64_t>(rows.size()) - small;

    if (small == 0 || small == static_cast<std::int64_t>(rows.size())) return index;
    if (rows.size() < params.min_split) return index;
    if (params.max_depth > 0 && depth >= params.max_depth) return index;

    const auto tests = test_battery(d, rows, predictors);
    const auto selected = select_split_variable(tests, params.alpha);
    if (!selected) return index;

    auto split = find_split(d, rows, *selected, params.min_leaf);
    if (!split) return index;  // no admissible split: the node stays a leaf

    RowIndexSet left_rows, right_rows;
    if (split->numeric) {
      for (RowIndex r : rows)
        (d.num_value(split->column, r) <= split->threshold ? left_rows : right_rows).push_back(r);
    } else {
      for (RowIndex r : rows)
        (split->left_mask[static_cast<std::size_t>(d.cat_code(split->column, r))] ? left_rows
                                                                                  : right_rows)
            .push_back(r);
    }

    for (const auto& t : tests) {
      if (t.column == *selected) {
        nodes[index].statistic = t.statistic;
        nodes[index].p_raw = t.p_raw;
        nodes[index].p_adjusted = t.p_adjusted;
        break;
      }
    }
    nodes[index].split = std::move(split);
    const int left = grow(left_rows, depth + 1);
    nodes[index].left = left;
    const int right = grow(right_rows, depth + 1);
    nodes[index].right = right;
    return index;
  }
};

}  // namespace

Tree grow_tree(const Dataset& d, const RowIndexSet& within, const TreeParams& params,
               const std::vector<std::size_t>& predictors) {
  if (within.empty()) throw DataError("grow_tree: empty training sample");
  TreeGrower grower{d, params, predictors, {}};
  grower.nodes.reserve(64);
  grower.grow(within, 0);
  Tree t;
  t.nodes = std::move(grower.nodes);
  t.params = params;
  return t;
}

const TreeNode& route_to_leaf(const Tree& t, const Dataset& d, RowIndex row) {
  const TreeNode* node = &t.nodes.front();
  while (!node->is_leaf()) {
    const TreeNode& left = t.nodes[static_cast<std::size_t>(node->left)];
    const TreeNode& right = t.nodes[static_cast<std::size_t>(node->right)];
    node = goes_left(*node->split, d, row, left.n(), right.n()) ? &left : &right;
  }
  return *node;
}

ClassProbs predict_probs(const Tree& t, const Dataset& d, RowIndex row) {
  const TreeNode& leaf = route_to_leaf(t, d, row);
  return {leaf.prob_large(), leaf.prob_small()};
}

ClassLabel predict_label(const Tree& t, const Dataset& d, RowIndex row) {
  const ClassProbs p = predict_probs(t, d, row);
  return p.small >= p.large ? ClassLabel::Small : ClassLabel::Large;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string format_p(double p) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", p);
  return buf;
}

}  // namespace

TreeDoc tree_doc(const Tree& t, const Dataset& d) {
  TreeDoc doc;
  doc.params = t.params;
  doc.nodes.reserve(t.nodes.size());
  for (const auto& node : t.nodes) {
    TreeDocNode out;
    out.id = node.id;
    out.count_large = node.count_large;
    out.count_small = node.count_small;
    if (!node.is_leaf()) {
      out.left = t.nodes[static_cast<std::size_t>(node.left)].id;
      out.right = t.nodes[static_cast<std::size_t>(node.right)].id;
      const Split& split = *node.split;
      out.variable = d.schema()[split.column].name;
      out.numeric_split = split.numeric;
      out.statistic = node.statistic;
      out.p_raw = node.p_raw;
      out.p_adjusted = node.p_adjusted;
      if (split.numeric) {
        out.threshold = split.threshold;
      } else {
        const auto& levels = d.schema()[split.column].levels;
        for (std::size_t lev = 0; lev < levels.size(); ++lev) {
          if (split.observed_mask[lev]) out.observed_levels.push_back(levels[lev]);
          if (split.left_mask[lev]) out.left_levels.push_back(levels[lev]);
        }
      }
    }
    doc.nodes.push_back(std::move(out));
  }
  return doc;
}

nlohmann::json tree_doc_to_json(const TreeDoc& doc) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : doc.nodes) {
    nlohmann::json j;
    j["id"] = n.id;
    j["count_large"] = n.count_large;
    j["count_small"] = n.count_small;
    if (n.left >= 0) {
      j["left"] = n.left;
      j["right"] = n.right;
      j["variable"] = n.variable;
      j["statistic"] = n.statistic;
      j["p_raw"] = n.p_raw;
      j["p_adjusted"] = n.p_adjusted;
      if (n.numeric_split) {
        j["threshold"] = n.threshold;
      } else {
        j["left_levels"] = n.left_levels;
        j["observed_levels"] = n.observed_levels;
      }
    }
    nodes.push_back(std::move(j));
  }
  nlohmann::json j;
  j["nodes"] = std::move(nodes);
  j["params"] = {{"alpha", doc.params.alpha},
                 {"min_split", doc.params.min_split},
                 {"min_leaf", doc.params.min_leaf},
                 {"max_depth", doc.params.max_depth}};
  return j;
}

TreeDoc tree_doc_from_json(const nlohmann::json& j) {
  TreeDoc doc;
  const auto& params = j.at("params");
  doc.params.alpha = params.at("alpha").get<double>();
  doc.params.min_split = params.at("min_split").get<std::size_t>();
  doc.params.min_leaf = params.at("min_leaf").get<std::size_t>();
  doc.params.max_depth = params.at("max_depth").get<std::size_t>();
  for (const auto& nj : j.at("nodes")) {
    TreeDocNode n;
    n.id = nj.at("id").get<int>();
    n.count_large = nj.at("count_large").get<std::int64_t>();
    n.count_small = nj.at("count_small").get<std::int64_t>();
    if (nj.contains("left")) {
      n.left = nj.at("left").get<int>();
      n.right = nj.at("right").get<int>();
      n.variable = nj.at("variable").get<std::string>();
      n.statistic = nj.at("statistic").get<double>();
      n.p_raw = nj.at("p_raw").get<double>();
      n.p_adjusted = nj.at("p_adjusted").get<double>();
      if (nj.contains("threshold")) {
        n.numeric_split = true;
        n.threshold = nj.at("threshold").get<double>();
      } else {
        n.left_levels = nj.at("left_levels").get<std::vector<std::string>>();
        n.observed_levels = nj.at("observed_levels").get<std::vector<std::string>>();
      }
    }
    doc.nodes.push_back(std::move(n));
  }
  return doc;
}

Tree tree_from_doc(const TreeDoc& doc, const Dataset& d) {
  Tree t;
  t.params = doc.params;
  t.nodes.reserve(doc.nodes.size());
  for (const auto& n : doc.nodes) {
    TreeNode node;
    node.id = n.id;
    node.count_large = n.count_large;
    node.count_small = n.count_small;
    if (n.left >= 0) {
      node.left = n.left - 1;  // ids are preorder positions
      node.right = n.right - 1;
      node.statistic = n.statistic;
      node.p_raw = n.p_raw;
      node.p_adjusted = n.p_adjusted;
      Split split;
      const std::size_t column = d.column_index(n.variable);
      split.column = column;
      split.numeric = n.numeric_split;
      if (n.numeric_split) {
        split.threshold = n.threshold;
      } else {
        const std::size_t n_levels = d.schema()[column].levels.size();
        split.left_mask.assign(n_levels, 0);
        split.observed_mask.assign(n_levels, 0);
        for (const auto& lev : n.left_levels)
          split.left_mask[static_cast<std::size_t>(d.level_code(column, lev))] = 1;
        for (const auto& lev : n.observed_levels)
          split.observed_mask[static_cast<std::size_t>(d.level_code(column, lev))] = 1;
      }
      node.split = std::move(split);
    }
    t.nodes.push_back(std::move(node));
  }
  return t;
}

namespace {

void render_node(const TreeDoc& doc, std::size_t index, std::size_t depth, std::string& out) {
  const TreeDocNode& n = doc.nodes[index];
  out.append(depth * 2, ' ');
  out += "[" + std::to_string(n.id) + "] ";
  if (n.left < 0) {
    out += "leaf:";
  } else if (n.numeric_split) {
    out += n.variable + " <= " + format_double(n.threshold) + ":";
  } else {
    out += n.variable + " in {";
    for (std::size_t i = 0; i < n.left_levels.size(); ++i) {
      if (i > 0) out += ", ";
      out += n.left_levels[i];
    }
    out += "}:";
  }
  const auto total = static_cast<double>(n.count_large + n.count_small);
  out += " counts=(" + std::to_string(n.count_large) + "," + std::to_string(n.count_small) + ")";
  out += " n=" + std::to_string(n.count_large + n.count_small);
  out += " small=" + format_fixed(static_cast<double>(n.count_small) / total, 3);
  if (n.left >= 0) out += " p_adj=" + format_p(n.p_adjusted);
  out += "\n";
  if (n.left >= 0) {
    render_node(doc, static_cast<std::size_t>(n.left - 1), depth + 1, out);
    render_node(doc, static_cast<std::size_t>(n.right - 1), depth + 1, out);
  }
}

}  // namespace

std::string render_tree(const TreeDoc& doc) {
  std::string out;
  render_node(doc, 0, 0, out);
  return out;
}

std::string render_tree(const Tree& t, const Dataset& d) { return render_tree(tree_doc(t, d)); }

}  // namespace nesprindt
