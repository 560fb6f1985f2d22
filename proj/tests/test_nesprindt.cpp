#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "nesprindt/generator.hpp"
#include "nesprindt/nesprindt.hpp"
#include "nesprindt/report_io.hpp"

using namespace nesprindt;

namespace {

Dataset planted(std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.seed = seed;
  cfg.child_large = 362;
  cfg.child_small = 41;
  cfg.adult_large = 2068;
  cfg.adult_small = 98;
  return generate_dataset(cfg);
}

RunConfig small_run(std::uint64_t seed) {
  RunConfig cfg;
  cfg.nesting = {"SPEAKER", "child"};
  cfg.outer_reps = 3;
  cfg.inner_reps = 20;
  cfg.k_best = 3;
  cfg.master_seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("nesprindt_run: cardinalities at a small scale") {
  const Dataset d = planted(1);
  const RunConfig cfg = small_run(7);
  const NesReport report = nesprindt_run(d, cfg, 4);

  CHECK(report.ba_outer_values.size() == cfg.outer_reps * cfg.inner_reps);
  CHECK(report.ba_full_values.size() == cfg.outer_reps * cfg.k_best);
  CHECK(report.outer.size() == cfg.outer_reps);
  for (const auto& rep : report.outer) {
    CHECK(rep.top.size() == cfg.k_best);
    CHECK(rep.filtered == 0);
    CHECK(rep.under_out_n == rep.under_out_large + rep.under_out_small);
    CHECK(rep.ensemble.member_ids.size() == 3);
    for (const auto& st : rep.top) CHECK(st.full.has_value());
  }
  // values are ordered by (outer, inner, percent)
  for (std::size_t i = 1; i < report.ba_outer_values.size(); ++i) {
    const auto& a = report.ba_outer_values[i - 1];
    const auto& b = report.ba_outer_values[i];
    CHECK((a.outer < b.outer || (a.outer == b.outer && a.inner < b.inner)));
  }
}

TEST_CASE("nesprindt_run: degenerate single-tree run") {
  const Dataset d = planted(2);
  RunConfig cfg = small_run(3);
  cfg.outer_reps = 1;
  cfg.inner_reps = 1;
  cfg.k_best = 1;
  const NesReport report = nesprindt_run(d, cfg, 1);

  CHECK(report.ba_outer_values.size() == 1);
  CHECK(report.ba_full_values.size() == 1);
  CHECK(report.best_by_outer_id == report.best_by_full_id);
  CHECK(report.best_identical);
  // both strategies collapse onto the same single member
  CHECK(report.outer[0].ensemble.member_ids == report.ensemble_b.member_ids);

  const ScoredTree& by_outer = best_tree(report, BestCriterion::ByOuter);
  const ScoredTree& by_full = best_tree(report, BestCriterion::ByFull);
  CHECK(by_outer.id() == by_full.id());
}

TEST_CASE("nesprindt_run: determinism across thread counts, canonical bytes") {
  const Dataset d = planted(3);
  const RunConfig cfg = small_run(11);
  const NesReport r1 = nesprindt_run(d, cfg, 1);
  const NesReport r8 = nesprindt_run(d, cfg, 8);
  CHECK(canonical_report(r1, d) == canonical_report(r8, d));
}

TEST_CASE("nesprindt_run: re-scoring reproduces every reported accuracy") {
  const Dataset d = planted(4);
  const RunConfig cfg = small_run(13);
  const NesReport report = nesprindt_run(d, cfg, 4);
  const nlohmann::json j = report_to_json(report, d);

  const SeedStream root(cfg.master_seed);
  const RowIndexSet full = d.all_rows();
  for (const auto& rep : j.at("outer")) {
    const std::size_t i = rep.at("index").get<std::size_t>();
    SeedStream outer_stream = root.derive("outer", i);
    const RowIndexSet under_out =
        undersample_level(d, cfg.nesting.column, cfg.nesting.small_level, outer_stream);
    CHECK(digest_indices(under_out) == rep.at("under_out").at("digest").get<std::string>());

    for (const auto& stj : rep.at("top")) {
      const Tree restored = tree_from_doc(tree_doc_from_json(stj.at("tree")), d);
      const BalancedAccuracy outer_score = score_tree(restored, d, under_out);
      CHECK(outer_score.ba == stj.at("ba_outer").get<double>());
      const BalancedAccuracy full_score = score_tree(restored, d, full);
      CHECK(full_score.ba == stj.at("ba_full").get<double>());
    }
  }
}

TEST_CASE("nesprindt_run: strategy B members are the top three by full-sample ba") {
  const Dataset d = planted(5);
  RunConfig cfg = small_run(17);
  cfg.outer_reps = 5;
  const NesReport report = nesprindt_run(d, cfg, 4);

  struct Entry {
    double ba;
    std::string id;
  };
  std::vector<Entry> entries;
  for (const auto& rep : report.outer)
    for (const auto& st : rep.top) entries.push_back({st.full->ba, st.id()});
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.ba > b.ba; });
  REQUIRE(report.ensemble_b.member_ids.size() == 3);
  const std::set<std::string> members(report.ensemble_b.member_ids.begin(),
                                      report.ensemble_b.member_ids.end());
  // tie groups make the exact id set ambiguous only when bas are equal; compare
  // the multiset of member bas against the top three of the sort
  std::vector<double> member_bas;
  for (const auto& e : entries)
    if (members.count(e.id)) member_bas.push_back(e.ba);
  REQUIRE(member_bas.size() == 3);
  std::sort(member_bas.begin(), member_bas.end(), std::greater<>());
  for (int i = 0; i < 3; ++i) CHECK(member_bas[static_cast<std::size_t>(i)] == entries[static_cast<std::size_t>(i)].ba);
}

TEST_CASE("nesprindt_run: undersample scores exceed full scores on reference-shaped data") {
  int favourable = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Dataset d = planted(700 + seed);
    RunConfig cfg = small_run(seed + 1);
    cfg.outer_reps = 2;
    cfg.inner_reps = 15;
    const NesReport report = nesprindt_run(d, cfg, 4);
    double mean_outer = 0.0, mean_full = 0.0;
    std::size_t kept = 0;
    for (const auto& rep : report.outer)
      for (const auto& st : rep.top) {
        mean_outer += st.ba_outer;
        mean_full += st.full->ba;
        ++kept;
      }
    favourable += mean_outer / kept > mean_full / kept;
  }
  CHECK(favourable >= 2);
}

TEST_CASE("nesprindt_run: per-repetition best trees score higher on their undersample") {
  GeneratorConfig gen;
  gen.seed = 808;
  gen.child_large = 725;
  gen.child_small = 81;
  gen.adult_large = 4136;
  gen.adult_small = 196;
  const Dataset d = generate_dataset(gen);
  RunConfig cfg = small_run(21);
  cfg.outer_reps = 10;
  cfg.inner_reps = 25;
  cfg.k_best = 1;
  const NesReport report = nesprindt_run(d, cfg, 8);
  int favourable = 0;
  for (const auto& rep : report.outer) {
    const auto& best = rep.top.front();
    favourable += best.ba_outer >= best.full->ba;
  }
  CHECK(favourable >= 8);
}

TEST_CASE("nesprindt_run: interpretability filtering reduces the pool") {
  GeneratorConfig gen;
  gen.seed = 7300;
  gen.child_large = 725;
  gen.child_small = 81;
  gen.adult_large = 4136;
  gen.adult_small = 196;
  const Dataset d = generate_dataset(gen);

  RunConfig cfg;
  cfg.nesting = {"SPEAKER", "child"};
  cfg.outer_reps = 1;
  cfg.inner_reps = 40;
  cfg.k_best = 3;
  cfg.master_seed = 55;
  ForbiddenCombination young;
  young.conjuncts.push_back({"AGE", Relation::Le, {}, 70.0});
  cfg.forbidden = {young};

  const NesReport report = nesprindt_run(d, cfg, 4);
  CHECK(report.outer[0].filtered > 0);
  CHECK(report.ba_outer_values.size() ==
        cfg.outer_reps * cfg.inner_reps - report.outer[0].filtered);
  // every reported tree passes the filter
  for (const auto& rep : report.outer)
    for (const auto& st : rep.top) CHECK(check_interpretable(st.tree, d, cfg.forbidden));
}

TEST_CASE("nesprindt_run: configuration validation") {
  const Dataset d = planted(6);
  RunConfig cfg = small_run(1);
  cfg.nesting.column = "PRN_TYPE";  // five levels, not a two-level partition
  CHECK_THROWS_AS(nesprindt_run(d, cfg, 1), DataError);

  cfg = small_run(1);
  cfg.nesting.small_level = "nope";
  CHECK_THROWS_AS(nesprindt_run(d, cfg, 1), DataError);

  cfg = small_run(1);
  cfg.percents = {1.5};
  CHECK_THROWS_AS(nesprindt_run(d, cfg, 1), ConfigError);

  cfg = small_run(1);
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(nesprindt_run(d, cfg, 1), ConfigError);
}

TEST_CASE("heterogeneity_probe: ranges, coverage, and the single-class flag") {
  // SPEAKER u rows: positions 0..9 all class large in the first half of the
  // sequence; zeros appear only in the second half
  std::vector<std::string> cls, spk;
  std::vector<double> x;
  for (int i = 0; i < 10; ++i) {
    cls.push_back("large");
    spk.push_back("u");
    x.push_back(static_cast<double>(i));
  }
  for (int i = 0; i < 6; ++i) {
    cls.push_back(i % 2 ? "small" : "large");
    spk.push_back("u");
    x.push_back(static_cast<double>(10 + i));
  }
  for (int i = 0; i < 8; ++i) {
    cls.push_back("large");  // the small speaker level carries no small-class rows
    spk.push_back("v");
    x.push_back(static_cast<double>(20 + i));
  }
  Dataset d = DatasetBuilder()
                  .add_categorical("class", cls)
                  .add_categorical("SPEAKER", spk)
                  .add_numeric("x", x)
                  .build("class");

  ProbeConfig cfg;
  cfg.nesting = {"SPEAKER", "v"};
  cfg.parts = 2;
  cfg.tree.min_split = 4;
  cfg.tree.min_leaf = 2;
  const auto parts = heterogeneity_probe(d, cfg);
  REQUIRE(parts.size() == 2);

  CHECK(parts[0].part == 1);
  CHECK(parts[0].row_start == 1);
  CHECK(parts[0].row_end == 8);
  CHECK(parts[1].row_start == 9);
  CHECK(parts[1].row_end == 16);

  CHECK(parts[0].single_class);  // first 8 u rows are all large, v rows too
  CHECK(parts[0].ba == 0.5);
  CHECK_FALSE(parts[1].single_class);
}

TEST_CASE("heterogeneity_probe: part count and homogeneous spread") {
  const Dataset d = planted(8);
  ProbeConfig cfg;
  cfg.nesting = {"SPEAKER", "child"};
  cfg.parts = 8;
  const auto parts = heterogeneity_probe(d, cfg);
  REQUIRE(parts.size() == 8);

  const RowIndexSet adults = rows_with_level(d, "SPEAKER", "adult");
  std::size_t covered = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    if (p > 0) CHECK(parts[p].row_start == parts[p - 1].row_end + 1);
    covered += parts[p].row_end - parts[p].row_start + 1;
  }
  CHECK(covered == adults.size());

  CHECK_THROWS_AS(heterogeneity_probe(d, ProbeConfig{{"SPEAKER", "child"}, 1, {}, {}}), ConfigError);
}

TEST_CASE("report JSON carries the probe when attached") {
  const Dataset d = planted(9);
  RunConfig cfg = small_run(19);
  cfg.outer_reps = 1;
  cfg.inner_reps = 2;
  NesReport report = nesprindt_run(d, cfg, 1);
  CHECK(report_to_json(report, d).at("probe").is_null());

  ProbeConfig probe_cfg;
  probe_cfg.nesting = cfg.nesting;
  probe_cfg.parts = 4;
  report.probe = heterogeneity_probe(d, probe_cfg);
  const nlohmann::json j = report_to_json(report, d);
  CHECK(j.at("probe").size() == 4);
  CHECK(j.at("probe")[0].at("part") == 1);
}

TEST_CASE("config file parsing and flag semantics") {
  const nlohmann::json j = {
      {"class_column", "class"},
      {"columns", {{"AGE", "numeric"}}},
      {"nesting", {{"column", "SPEAKER"}, {"small_level", "child"}}},
      {"outer_reps", 4},
      {"inner_reps", 55},
      {"percents", {0.06, 0.1}},
      {"alpha", 0.02},
      {"k_best", 2},
      {"seed", 99},
      {"tree", {{"min_split", 30}, {"min_leaf", 9}, {"max_depth", 4}}},
      {"forbidden",
       {{{"conjuncts",
          {{{"variable", "MLU"}, {"in", {"adult"}}},
           {{"variable", "AGE"}, {"op", "<="}, {"value", 100.0}}}}}}},
      {"probe_parts", 8},
  };
  const FileConfig cfg = parse_config(j);
  CHECK(cfg.class_column == "class");
  CHECK(cfg.column_kinds.at("AGE") == ColumnKind::Numeric);
  CHECK(cfg.run.outer_reps == 4);
  CHECK(cfg.run.inner_reps == 55);
  CHECK(cfg.run.percents == std::vector<double>{0.06, 0.1});
  CHECK(cfg.run.alpha == 0.02);
  CHECK(cfg.run.tree.alpha == 0.02);
  CHECK(cfg.run.k_best == 2);
  CHECK(cfg.run.master_seed == 99);
  CHECK(cfg.run.tree.min_split == 30);
  CHECK(cfg.run.tree.max_depth == 4);
  REQUIRE(cfg.run.forbidden.size() == 1);
  REQUIRE(cfg.run.forbidden[0].conjuncts.size() == 2);
  CHECK(cfg.run.forbidden[0].conjuncts[0].relation == Relation::InLevels);
  CHECK(cfg.run.forbidden[0].conjuncts[1].relation == Relation::Le);
  CHECK(cfg.probe_parts == 8);

  CHECK_THROWS_AS(parse_config({{"columns", {{"AGE", "wat"}}}}), ConfigError);
  CHECK_THROWS_AS(
      parse_config({{"forbidden", {{{"conjuncts", {{{"variable", "x"}, {"op", "=="}, {"value", 1.0}}}}}}}}),
      ConfigError);
}
