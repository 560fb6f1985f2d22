#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nesprindt/generator.hpp"
#include "nesprindt/prindt.hpp"
#include "nesprindt/sampling.hpp"
#include "oracles.hpp"

using namespace nesprindt;

namespace {

std::vector<ClassLabel> labels(const std::string& pattern) {
  std::vector<ClassLabel> out;
  for (char c : pattern) out.push_back(c == 'S' ? ClassLabel::Small : ClassLabel::Large);
  return out;
}

Dataset planted(std::uint64_t seed, std::size_t scale = 1) {
  GeneratorConfig cfg;
  cfg.seed = seed;
  cfg.child_large = 362 * scale;
  cfg.child_small = 41 * scale;
  cfg.adult_large = 2068 * scale;
  cfg.adult_small = 98 * scale;
  return generate_dataset(cfg);
}

// a single-leaf tree with the given counts, built through the doc path
Tree leaf_tree(std::int64_t large, std::int64_t small, const Dataset& d) {
  TreeDoc doc;
  TreeDocNode n;
  n.id = 1;
  n.count_large = large;
  n.count_small = small;
  doc.nodes.push_back(n);
  return tree_from_doc(doc, d);
}

}  // namespace

TEST_CASE("balanced_accuracy: rounded class accuracies 0.84 and 0.31 average to 0.575") {
  std::vector<ClassLabel> truth, pred;
  for (int i = 0; i < 100; ++i) {
    truth.push_back(ClassLabel::Large);
    pred.push_back(i < 84 ? ClassLabel::Large : ClassLabel::Small);
  }
  for (int i = 0; i < 100; ++i) {
    truth.push_back(ClassLabel::Small);
    pred.push_back(i < 31 ? ClassLabel::Small : ClassLabel::Large);
  }
  const BalancedAccuracy ba = balanced_accuracy(pred, truth);
  CHECK(ba.acc_large == doctest::Approx(0.84).epsilon(1e-12));
  CHECK(ba.acc_small == doctest::Approx(0.31).epsilon(1e-12));
  CHECK(ba.ba == doctest::Approx(0.575).epsilon(1e-12));
}

TEST_CASE("balanced_accuracy: degenerate vectors") {
  const auto truth = labels("LLLSS");
  CHECK(balanced_accuracy(truth, truth).ba == 1.0);

  const auto constant = labels("LLLLL");
  const BalancedAccuracy ba = balanced_accuracy(constant, truth);
  CHECK(ba.ba == doctest::Approx(0.5));
  CHECK(ba.acc_large == 1.0);
  CHECK(ba.acc_small == 0.0);

  CHECK_THROWS_AS(balanced_accuracy(constant, labels("LLLLL")), DataError);
  CHECK_THROWS_AS(balanced_accuracy(labels("LS"), labels("LSL")), DataError);
}

TEST_CASE("balanced_accuracy equals the confusion-matrix oracle") {
  SeedStream rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.uniform_below(120);
    std::vector<ClassLabel> truth, pred;
    bool has_large = false, has_small = false;
    for (std::size_t i = 0; i < n; ++i) {
      const bool small = rng.uniform_below(2) == 1;
      truth.push_back(small ? ClassLabel::Small : ClassLabel::Large);
      pred.push_back(rng.uniform_below(2) == 1 ? ClassLabel::Small : ClassLabel::Large);
      has_large |= !small;
      has_small |= small;
    }
    if (!has_large || !has_small) continue;
    const BalancedAccuracy impl = balanced_accuracy(pred, truth);
    const oracles::BaResult oracle = oracles::confusion_matrix_ba(pred, truth);
    CHECK(impl.ba == oracle.ba);  // bit-exact
    CHECK(impl.acc_large == oracle.acc_large);
    CHECK(impl.acc_small == oracle.acc_small);
  }
}

TEST_CASE("check_interpretable: interval implication") {
  const Dataset d = planted(3);

  // tree splitting MLU in {adult} then AGE <= 66 on the adult side
  TreeDoc doc;
  TreeDocNode root;
  root.id = 1;
  root.count_large = 100;
  root.count_small = 50;
  root.left = 2;
  root.right = 5;
  root.variable = "MLU";
  root.left_levels = {"adult"};
  root.observed_levels = {"2", "3", "adult"};
  root.p_adjusted = 0.001;
  TreeDocNode mid;
  mid.id = 2;
  mid.count_large = 60;
  mid.count_small = 30;
  mid.left = 3;
  mid.right = 4;
  mid.variable = "AGE";
  mid.numeric_split = true;
  mid.threshold = 66.0;
  mid.p_adjusted = 0.002;
  TreeDocNode leaf3{3, 30, 20, -1, -1, "", false, 0, {}, {}, 0, 1, 1};
  TreeDocNode leaf4{4, 30, 10, -1, -1, "", false, 0, {}, {}, 0, 1, 1};
  TreeDocNode leaf5{5, 40, 20, -1, -1, "", false, 0, {}, {}, 0, 1, 1};
  doc.nodes = {root, mid, leaf3, leaf4, leaf5};
  const Tree t = tree_from_doc(doc, d);

  ForbiddenCombination combo;
  combo.conjuncts.push_back({"MLU", Relation::InLevels, {"adult"}, 0.0});
  combo.conjuncts.push_back({"AGE", Relation::Le, {}, 100.0});

  CHECK_FALSE(check_interpretable(t, d, {combo}));  // path MLU=adult & AGE<=66 implies both
  const auto witness = find_forbidden_witness(t, d, {combo});
  REQUIRE(witness.has_value());
  CHECK(*witness == std::vector<int>{1, 2, 3});

  CHECK(check_interpretable(t, d, {}));  // no restrictions

  // a combination about an unconstrained variable cannot be implied
  ForbiddenCombination unrelated;
  unrelated.conjuncts.push_back({"PRN_TYPE", Relation::InLevels, {"refer"}, 0.0});
  CHECK(check_interpretable(t, d, {unrelated}));

  // AGE > version: the right branch of the AGE split implies AGE > 50
  ForbiddenCombination gt;
  gt.conjuncts.push_back({"MLU", Relation::InLevels, {"adult"}, 0.0});
  gt.conjuncts.push_back({"AGE", Relation::Gt, {}, 50.0});
  CHECK_FALSE(check_interpretable(t, d, {gt}));
  const auto gt_witness = find_forbidden_witness(t, d, {gt});
  REQUIRE(gt_witness.has_value());
  CHECK(*gt_witness == std::vector<int>{1, 2, 4});
}

TEST_CASE("check_interpretable: subset vs overlap") {
  const Dataset d = planted(4);
  TreeDoc doc;
  TreeDocNode root;
  root.id = 1;
  root.count_large = 100;
  root.count_small = 40;
  root.left = 2;
  root.right = 3;
  root.variable = "PRN_TYPE";
  root.left_levels = {"it_ex", "it_ref"};
  root.observed_levels = {"refer", "dem", "it_ex", "it_ref", "it_con"};
  root.p_adjusted = 0.001;
  TreeDocNode l{2, 50, 30, -1, -1, "", false, 0, {}, {}, 0, 1, 1};
  TreeDocNode r{3, 50, 10, -1, -1, "", false, 0, {}, {}, 0, 1, 1};
  doc.nodes = {root, l, r};
  const Tree t = tree_from_doc(doc, d);

  // implication needs the path set to be a subset of the forbidden set
  ForbiddenCombination superset;
  superset.conjuncts.push_back({"PRN_TYPE", Relation::InLevels, {"it_ex", "it_ref", "it_con"}, 0.0});
  CHECK_FALSE(check_interpretable(t, d, {superset}));

  ForbiddenCombination overlap;
  overlap.conjuncts.push_back({"PRN_TYPE", Relation::InLevels, {"it_ex"}, 0.0});
  // left branch allows {it_ex, it_ref}, not a subset of {it_ex}: mere overlap
  // must not reject; the right branch allows the complement
  CHECK(check_interpretable(t, d, {overlap}));
}

TEST_CASE("prindt_inner: shapes, ordering, determinism") {
  const Dataset d = planted(9);
  SeedStream outer = SeedStream(5).derive("outer", 0);
  const RowIndexSet under_out = undersample_level(d, "SPEAKER", "child", outer);

  InnerConfig cfg;
  cfg.inner_reps = 25;
  cfg.predictors = {1, 2, 3, 4};
  const InnerResult a = prindt_inner(d, under_out, cfg, outer, 0, 4);
  const InnerResult b = prindt_inner(d, under_out, cfg, outer, 0, 1);

  CHECK(a.ranked.size() == 25);
  CHECK(a.filtered == 0);
  REQUIRE(a.ranked.size() == b.ranked.size());
  for (std::size_t i = 0; i < a.ranked.size(); ++i) {
    CHECK(a.ranked[i].id() == b.ranked[i].id());
    CHECK(a.ranked[i].ba_outer == b.ranked[i].ba_outer);
  }
  for (std::size_t i = 1; i < a.ranked.size(); ++i) {
    CHECK(a.ranked[i - 1].ba_outer >= a.ranked[i].ba_outer);
    if (a.ranked[i - 1].ba_outer == a.ranked[i].ba_outer)
      CHECK(a.ranked[i - 1].inner < a.ranked[i].inner);
  }
}

TEST_CASE("prindt_inner: perfect separation scores 1.0") {
  std::vector<std::string> cls, grp;
  std::vector<double> x;
  for (int i = 0; i < 200; ++i) {
    const bool small = i % 4 == 0;
    cls.push_back(small ? "small" : "large");
    grp.push_back(i % 2 ? "u" : "v");
    x.push_back(small ? 1000.0 + i : static_cast<double>(i));
  }
  Dataset d = DatasetBuilder()
                  .add_categorical("class", cls)
                  .add_categorical("g", grp)
                  .add_numeric("x", x)
                  .build("class");
  InnerConfig cfg;
  cfg.inner_reps = 1;
  cfg.percents = {0.5};
  cfg.predictors = {2};
  const InnerResult result = prindt_inner(d, d.all_rows(), cfg, SeedStream(1), 0, 1);
  REQUIRE(result.ranked.size() == 1);
  CHECK(result.ranked[0].ba_outer == doctest::Approx(1.0));
}

TEST_CASE("prindt_inner: an all-covering forbidden combination empties the run") {
  const Dataset d = planted(10);
  SeedStream outer = SeedStream(6).derive("outer", 0);
  const RowIndexSet under_out = undersample_level(d, "SPEAKER", "child", outer);

  InnerConfig cfg;
  cfg.inner_reps = 3;
  cfg.predictors = {1, 2, 3, 4};
  ForbiddenCombination everything;
  everything.conjuncts.push_back(
      {"PRN_TYPE", Relation::InLevels, {"refer", "dem", "it_ex", "it_ref", "it_con"}, 0.0});
  cfg.forbidden = {everything};
  CHECK_THROWS_AS(prindt_inner(d, under_out, cfg, outer, 0, 2), EmptyResultError);
}

TEST_CASE("top_k: prefix of the full sort, truncation, argmax") {
  const Dataset d = planted(11);
  std::vector<ScoredTree> scored;
  SeedStream rng(2);
  for (std::size_t j = 0; j < 40; ++j) {
    ScoredTree st;
    st.tree = leaf_tree(5, 5, d);
    st.outer = 0;
    st.inner = j;
    st.ba_outer = static_cast<double>(rng.uniform_below(10)) / 10.0;
    scored.push_back(std::move(st));
  }
  const auto three = top_k(scored, 3);
  REQUIRE(three.size() == 3);
  CHECK(three[0].ba_outer >= three[1].ba_outer);
  CHECK(three[1].ba_outer >= three[2].ba_outer);
  const auto all = top_k(scored, scored.size());
  for (int i = 0; i < 3; ++i) CHECK(all[i].id() == three[i].id());

  // a strictly better tree displaces exactly one member
  ScoredTree better;
  better.tree = leaf_tree(5, 5, d);
  better.outer = 0;
  better.inner = 99;
  better.ba_outer = 2.0;
  scored.push_back(std::move(better));
  const auto after = top_k(scored, 3);
  CHECK(after[0].inner == 99);
  CHECK(after[1].id() == three[0].id());
  CHECK(after[2].id() == three[1].id());

  const auto two = top_k(std::vector<ScoredTree>(scored.begin(), scored.begin() + 2), 3);
  CHECK(two.size() == 2);
  CHECK(top_k(scored, 1).size() == 1);
}

TEST_CASE("ensemble: averaging, ties, and the identity cases") {
  const Dataset d = planted(12);

  // three leaf trees with probabilities (0.6,0.4), (0.6,0.4), (0.1,0.9)
  const Tree t1 = leaf_tree(6, 4, d);
  const Tree t2 = leaf_tree(6, 4, d);
  const Tree t3 = leaf_tree(1, 9, d);
  Ensemble mixed{{&t1, &t2, &t3}};
  const ClassProbs p = ensemble_probs(mixed, d, 0);
  CHECK(p.large == doctest::Approx(13.0 / 30.0));
  CHECK(p.small == doctest::Approx(17.0 / 30.0));
  CHECK(ensemble_predict(mixed, d, 0) == ClassLabel::Small);

  // three copies of one tree behave exactly like the tree
  const Tree grown = grow_tree(d, d.all_rows(), TreeParams{}, {1, 2, 3, 4});
  Ensemble copies{{&grown, &grown, &grown}};
  Ensemble single{{&grown}};
  for (RowIndex r = 0; r < d.n_rows(); r += 3) {
    CHECK(ensemble_predict(copies, d, r) == predict_label(grown, d, r));
    CHECK(ensemble_predict(single, d, r) == predict_label(grown, d, r));
  }

  const BalancedAccuracy se = score_ensemble(copies, d, d.all_rows());
  const BalancedAccuracy st = score_tree(grown, d, d.all_rows());
  CHECK(se.ba == st.ba);
}
