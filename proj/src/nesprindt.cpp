#include "nesprindt/nesprindt.hpp"

#include <algorithm>
#include <cstdio>

namespace nesprindt {

std::string digest_indices(const RowIndexSet& rows) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (RowIndex r : rows) {
    for (int shift = 0; shift < 32; shift += 8) {
      h ^= (r >> shift) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::size_t> resolve_predictors(const Dataset& d, const std::vector<std::string>& names,
                                            const std::string& nesting_column) {
  std::vector<std::size_t> out;
  if (names.empty()) {
    for (std::size_t c = 0; c < d.n_columns(); ++c) {
      if (c == d.class_column()) continue;
      if (!nesting_column.empty() && d.schema()[c].name == nesting_column) continue;
      out.push_back(c);
    }
    if (out.empty()) throw ConfigError("no predictor columns available");
    return out;
  }
  for (const auto& name : names) {
    const std::size_t c = d.column_index(name);
    if (c == d.class_column()) throw ConfigError("class column cannot be a predictor: " + name);
    out.push_back(c);
  }
  return out;
}

namespace {

std::size_t ensemble_size(std::size_t pool) { return std::min<std::size_t>(3, pool); }

void validate_config(const Dataset& d, const RunConfig& cfg) {
  if (cfg.outer_reps < 1 || cfg.inner_reps < 1) throw ConfigError("repetition counts must be >= 1");
  if (cfg.k_best < 1) throw ConfigError("k_best must be >= 1");
  if (cfg.alpha <= 0.0 || cfg.alpha >= 1.0) throw ConfigError("alpha must lie in (0, 1)");
  if (cfg.percents.empty()) throw ConfigError("at least one undersample percent is required");
  for (double p : cfg.percents)
    if (p <= 0.0 || p > 1.0) throw ConfigError("percents must lie in (0, 1]");
  if (cfg.nesting.column.empty()) throw ConfigError("nesting column is required");
  const std::size_t col = d.column_index(cfg.nesting.column);  // throws DataError if unknown
  if (!d.is_categorical(col) || d.schema()[col].levels.size() != 2)
    throw DataError("nesting column " + cfg.nesting.column + " must be categorical with two levels");
  d.level_code(col, cfg.nesting.small_level);
}

}  // namespace

NesReport nesprindt_run(const Dataset& d, const RunConfig& cfg_in, std::size_t threads) {
  RunConfig cfg = cfg_in;
  cfg.tree.alpha = cfg.alpha;
  validate_config(d, cfg);

  NesReport report;
  report.config = cfg;
  report.n_rows = d.n_rows();
  const auto [full_large, full_small] = class_counts(d);
  report.class_large = full_large;
  report.class_small = full_small;

  InnerConfig inner_cfg;
  inner_cfg.percents = cfg.percents;
  inner_cfg.inner_reps = cfg.inner_reps;
  inner_cfg.tree = cfg.tree;
  inner_cfg.forbidden = cfg.forbidden;
  inner_cfg.predictors = resolve_predictors(d, cfg.predictors, cfg.nesting.column);

  const SeedStream root(cfg.master_seed);
  std::vector<RowIndexSet> under_outs;
  under_outs.reserve(cfg.outer_reps);

  for (std::size_t i = 0; i < cfg.outer_reps; ++i) {
    SeedStream outer_stream = root.derive("outer", i);
    RowIndexSet under_out =
        undersample_level(d, cfg.nesting.column, cfg.nesting.small_level, outer_stream);

    InnerResult inner = prindt_inner(d, under_out, inner_cfg, outer_stream, i, threads);

    OuterRepReport rep;
    rep.index = i;
    rep.under_out_digest = digest_indices(under_out);
    rep.under_out_n = under_out.size();
    const auto [large, small] = class_counts(d, under_out);
    rep.under_out_large = large;
    rep.under_out_small = small;
    rep.filtered = inner.filtered;

    for (const auto& st : inner.ranked)
      report.ba_outer_values.push_back({st.outer, st.inner, st.percent_index, st.percent, st.ba_outer});

    rep.top = top_k(inner.ranked, cfg.k_best);

    // Strategy A: ensemble of this repetition's three best trees, scored on
    // its own under_out.
    Ensemble ens;
    const std::size_t take = ensemble_size(rep.top.size());
    for (std::size_t m = 0; m < take; ++m) {
      ens.members.push_back(&rep.top[m].tree);
      rep.ensemble.member_ids.push_back(rep.top[m].id());
    }
    rep.ensemble.score = score_ensemble(ens, d, under_out);

    report.outer.push_back(std::move(rep));
    under_outs.push_back(std::move(under_out));
  }

  // ba values in (outer, inner, percent) order regardless of ranking.
  std::sort(report.ba_outer_values.begin(), report.ba_outer_values.end(),
            [](const BaRecord& a, const BaRecord& b) {
              if (a.outer != b.outer) return a.outer < b.outer;
              if (a.inner != b.inner) return a.inner < b.inner;
              return a.percent_index < b.percent_index;
            });

  // Score every kept tree on the full sample.
  const RowIndexSet full_rows = d.all_rows();
  for (auto& rep : report.outer)
    for (auto& st : rep.top) {
      st.full = score_tree(st.tree, d, full_rows);
      report.ba_full_values.push_back(
          {st.outer, st.inner, st.percent_index, st.percent, st.full->ba});
    }
  std::sort(report.ba_full_values.begin(), report.ba_full_values.end(),
            [](const BaRecord& a, const BaRecord& b) {
              if (a.outer != b.outer) return a.outer < b.outer;
              if (a.inner != b.inner) return a.inner < b.inner;
              return a.percent_index < b.percent_index;
            });

  report.best_by_outer_id = best_tree(report, BestCriterion::ByOuter).id();
  report.best_by_full_id = best_tree(report, BestCriterion::ByFull).id();
  report.best_identical = report.best_by_outer_id == report.best_by_full_id;

  // Best strategy-A ensemble across repetitions (earlier repetition on ties).
  std::size_t best_rep = 0;
  for (std::size_t i = 1; i < report.outer.size(); ++i)
    if (report.outer[i].ensemble.score.ba > report.outer[best_rep].ensemble.score.ba) best_rep = i;
  report.ensemble_a_best_rep = best_rep;

  // Strategy B: rank all kept trees by full-sample ba, ensemble the top three,
  // score on the full sample.
  std::vector<const ScoredTree*> kept;
  for (const auto& rep : report.outer)
    for (const auto& st : rep.top) kept.push_back(&st);
  std::sort(kept.begin(), kept.end(), [](const ScoredTree* a, const ScoredTree* b) {
    if (a->full->ba != b->full->ba) return a->full->ba > b->full->ba;
    if (a->outer != b->outer) return a->outer < b->outer;
    if (a->inner != b->inner) return a->inner < b->inner;
    return a->percent_index < b->percent_index;
  });
  Ensemble strategy_b;
  const std::size_t take = ensemble_size(kept.size());
  for (std::size_t m = 0; m < take; ++m) {
    strategy_b.members.push_back(&kept[m]->tree);
    report.ensemble_b.member_ids.push_back(kept[m]->id());
  }
  report.ensemble_b.score = score_ensemble(strategy_b, d, full_rows);

  return report;
}

std::vector<ProbePart> heterogeneity_probe(const Dataset& d, const ProbeConfig& cfg) {
  if (cfg.parts < 2) throw ConfigError("probe needs at least 2 parts");
  const std::size_t col = d.column_index(cfg.nesting.column);
  if (!d.is_categorical(col) || d.schema()[col].levels.size() != 2)
    throw DataError("nesting column " + cfg.nesting.column + " must be categorical with two levels");

  const auto& levels = d.schema()[col].levels;
  const std::int32_t small_code = d.level_code(col, cfg.nesting.small_level);
  const std::string& large_level = levels[static_cast<std::size_t>(1 - small_code)];

  const RowIndexSet large_rows = rows_with_level(d, cfg.nesting.column, large_level);
  const RowIndexSet small_rows = rows_with_level(d, cfg.nesting.column, cfg.nesting.small_level);
  const auto parts = partition_in_order(large_rows, cfg.parts);
  const auto predictors = resolve_predictors(d, cfg.predictors, cfg.nesting.column);

  std::vector<ProbePart> out;
  out.reserve(parts.size());
  std::size_t position = 1;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    ProbePart result;
    result.part = p + 1;
    result.row_start = position;
    result.row_end = position + parts[p].size() - 1;
    position += parts[p].size();

    RowIndexSet train;
    train.reserve(parts[p].size() + small_rows.size());
    std::merge(parts[p].begin(), parts[p].end(), small_rows.begin(), small_rows.end(),
               std::back_inserter(train));

    const auto [large, small] = class_counts(d, train);
    if (large == 0 || small == 0) {
      // A one-class part forces constant prediction; ba is undefined and
      // reported as 0.5 with the flag set.
      result.single_class = true;
      result.ba = 0.5;
    } else {
      const Tree tree = grow_tree(d, train, cfg.tree, predictors);
      result.ba = score_tree(tree, d, train).ba;
    }
    out.push_back(result);
  }
  return out;
}

const ScoredTree& best_tree(const NesReport& report, BestCriterion criterion) {
  const ScoredTree* best = nullptr;
  // ties on the criterion go to the earlier (outer, inner, percent) triple
  auto beats = [&](const ScoredTree& a, const ScoredTree& b) {
    const double va = criterion == BestCriterion::ByOuter ? a.ba_outer : a.full->ba;
    const double vb = criterion == BestCriterion::ByOuter ? b.ba_outer : b.full->ba;
    if (va != vb) return va > vb;
    if (a.outer != b.outer) return a.outer < b.outer;
    if (a.inner != b.inner) return a.inner < b.inner;
    return a.percent_index < b.percent_index;
  };
  for (const auto& rep : report.outer) {
    for (const auto& st : rep.top) {
      if (criterion == BestCriterion::ByFull && !st.full) continue;
      if (best == nullptr || beats(st, *best)) best = &st;
    }
  }
  if (best == nullptr) throw EmptyResultError("report holds no scored trees");
  return *best;
}

namespace {

nlohmann::json ba_to_json(const BalancedAccuracy& s) {
  return {{"ba", s.ba}, {"acc_large", s.acc_large}, {"acc_small", s.acc_small}};
}

nlohmann::json scored_tree_to_json(const ScoredTree& st, const Dataset& d) {
  nlohmann::json j;
  j["id"] = st.id();
  j["outer"] = st.outer;
  j["inner"] = st.inner;
  j["percent_index"] = st.percent_index;
  j["percent"] = st.percent;
  j["ba_outer"] = st.ba_outer;
  j["acc_large_outer"] = st.acc_large_outer;
  j["acc_small_outer"] = st.acc_small_outer;
  if (st.full) {
    j["ba_full"] = st.full->ba;
    j["acc_large_full"] = st.full->acc_large;
    j["acc_small_full"] = st.full->acc_small;
  }
  j["tree"] = tree_doc_to_json(tree_doc(st.tree, d));
  return j;
}

nlohmann::json forbidden_to_json(const std::vector<ForbiddenCombination>& forbidden) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& combination : forbidden) {
    nlohmann::json conjuncts = nlohmann::json::array();
    for (const auto& c : combination.conjuncts) {
      nlohmann::json cj;
      cj["variable"] = c.variable;
      if (c.relation == Relation::InLevels) {
        cj["in"] = c.levels;
      } else {
        cj["op"] = c.relation == Relation::Le ? "<=" : ">";
        cj["value"] = c.value;
      }
      conjuncts.push_back(std::move(cj));
    }
    out.push_back({{"conjuncts", std::move(conjuncts)}});
  }
  return out;
}

nlohmann::json records_to_json(const std::vector<BaRecord>& records) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : records)
    out.push_back({r.outer, r.inner, r.percent, r.ba});
  return out;
}

}  // namespace

nlohmann::json report_to_json(const NesReport& report, const Dataset& d) {
  nlohmann::json j;

  nlohmann::json config;
  config["nesting"] = {{"column", report.config.nesting.column},
                       {"small_level", report.config.nesting.small_level}};
  config["outer_reps"] = report.config.outer_reps;
  config["inner_reps"] = report.config.inner_reps;
  config["percents"] = report.config.percents;
  config["alpha"] = report.config.alpha;
  config["k_best"] = report.config.k_best;
  config["master_seed"] = report.config.master_seed;
  config["tree"] = {{"min_split", report.config.tree.min_split},
                    {"min_leaf", report.config.tree.min_leaf},
                    {"max_depth", report.config.tree.max_depth}};
  config["forbidden"] = forbidden_to_json(report.config.forbidden);
  config["predictors"] = report.config.predictors;
  j["config"] = std::move(config);

  j["dataset"] = {{"n_rows", report.n_rows},
                  {"class_large", report.class_large},
                  {"class_small", report.class_small},
                  {"class_level_large", d.class_level(ClassLabel::Large)},
                  {"class_level_small", d.class_level(ClassLabel::Small)}};

  nlohmann::json outer = nlohmann::json::array();
  for (const auto& rep : report.outer) {
    nlohmann::json rj;
    rj["index"] = rep.index;
    rj["under_out"] = {{"digest", rep.under_out_digest},
                       {"n", rep.under_out_n},
                       {"class_large", rep.under_out_large},
                       {"class_small", rep.under_out_small}};
    rj["filtered"] = rep.filtered;
    nlohmann::json top = nlohmann::json::array();
    for (const auto& st : rep.top) top.push_back(scored_tree_to_json(st, d));
    rj["top"] = std::move(top);
    rj["ensemble_a"] = {{"members", rep.ensemble.member_ids},
                        {"score", ba_to_json(rep.ensemble.score)}};
    outer.push_back(std::move(rj));
  }
  j["outer"] = std::move(outer);

  j["ba_outer_values"] = records_to_json(report.ba_outer_values);
  j["ba_full_values"] = records_to_json(report.ba_full_values);

  j["best_by_outer"] = report.best_by_outer_id;
  j["best_by_full"] = report.best_by_full_id;
  j["best_identical"] = report.best_identical;

  j["ensemble_a_best"] = {
      {"outer", report.ensemble_a_best_rep},
      {"members", report.outer[report.ensemble_a_best_rep].ensemble.member_ids},
      {"score", ba_to_json(report.outer[report.ensemble_a_best_rep].ensemble.score)}};
  j["ensemble_b"] = {{"members", report.ensemble_b.member_ids},
                     {"score", ba_to_json(report.ensemble_b.score)}};

  if (report.probe) {
    nlohmann::json probe = nlohmann::json::array();
    for (const auto& part : *report.probe)
      probe.push_back({{"part", part.part},
                       {"row_start", part.row_start},
                       {"row_end", part.row_end},
                       {"ba", part.ba},
                       {"single_class", part.single_class}});
    j["probe"] = std::move(probe);
  } else {
    j["probe"] = nullptr;
  }
  return j;
}

}  // namespace nesprindt
