#include "nesprindt/report_io.hpp"

#include <charconv>
#include <fstream>

namespace nesprindt {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

std::vector<ForbiddenCombination> parse_forbidden(const nlohmann::json& j) {
  std::vector<ForbiddenCombination> out;
  for (const auto& cj : j) {
    ForbiddenCombination combination;
    for (const auto& conj : cj.at("conjuncts")) {
      ForbiddenConjunct c;
      c.variable = conj.at("variable").get<std::string>();
      if (conj.contains("in")) {
        c.relation = Relation::InLevels;
        c.levels = conj.at("in").get<std::vector<std::string>>();
        if (c.levels.empty()) throw ConfigError("forbidden conjunct with empty level list");
      } else {
        const std::string op = conj.at("op").get<std::string>();
        if (op == "<=")
          c.relation = Relation::Le;
        else if (op == ">")
          c.relation = Relation::Gt;
        else
          throw ConfigError("forbidden conjunct operator must be '<=' or '>', got " + op);
        c.value = conj.at("value").get<double>();
      }
      combination.conjuncts.push_back(std::move(c));
    }
    if (combination.conjuncts.empty()) throw ConfigError("forbidden combination with no conjuncts");
    out.push_back(std::move(combination));
  }
  return out;
}

FileConfig parse_config(const nlohmann::json& j) {
  FileConfig cfg;
  try {
    if (j.contains("class_column")) cfg.class_column = j.at("class_column").get<std::string>();
    if (j.contains("columns")) {
      for (const auto& [name, kind] : j.at("columns").items()) {
        const std::string k = kind.get<std::string>();
        if (k == "numeric")
          cfg.column_kinds[name] = ColumnKind::Numeric;
        else if (k == "categorical")
          cfg.column_kinds[name] = ColumnKind::Categorical;
        else
          throw ConfigError("column kind must be 'numeric' or 'categorical', got " + k);
      }
    }
    if (j.contains("nesting")) {
      cfg.run.nesting.column = j.at("nesting").at("column").get<std::string>();
      cfg.run.nesting.small_level = j.at("nesting").at("small_level").get<std::string>();
    }
    if (j.contains("outer_reps")) cfg.run.outer_reps = j.at("outer_reps").get<std::size_t>();
    if (j.contains("inner_reps")) cfg.run.inner_reps = j.at("inner_reps").get<std::size_t>();
    if (j.contains("percents")) cfg.run.percents = j.at("percents").get<std::vector<double>>();
    if (j.contains("alpha")) cfg.run.alpha = j.at("alpha").get<double>();
    if (j.contains("k_best")) cfg.run.k_best = j.at("k_best").get<std::size_t>();
    if (j.contains("seed")) cfg.run.master_seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("tree")) {
      const auto& t = j.at("tree");
      if (t.contains("min_split")) cfg.run.tree.min_split = t.at("min_split").get<std::size_t>();
      if (t.contains("min_leaf")) cfg.run.tree.min_leaf = t.at("min_leaf").get<std::size_t>();
      if (t.contains("max_depth")) cfg.run.tree.max_depth = t.at("max_depth").get<std::size_t>();
    }
    if (j.contains("forbidden")) cfg.run.forbidden = parse_forbidden(j.at("forbidden"));
    if (j.contains("predictors"))
      cfg.run.predictors = j.at("predictors").get<std::vector<std::string>>();
    if (j.contains("probe_parts")) cfg.probe_parts = j.at("probe_parts").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  cfg.run.tree.alpha = cfg.run.alpha;
  return cfg;
}

FileConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

std::string canonical_report(const NesReport& report, const Dataset& d) {
  return report_to_json(report, d).dump(2) + "\n";
}

void write_ba_csv(const std::vector<BaRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << "outer,inner,percent,ba\n";
  for (const auto& r : records)
    out << r.outer << ',' << r.inner << ',' << format_double(r.percent) << ','
        << format_double(r.ba) << '\n';
  if (!out) throw DataError("write failure: " + path.string());
}

void write_probe_csv(const std::vector<ProbePart>& parts, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << "part,row_start,row_end,ba,single_class\n";
  for (const auto& p : parts)
    out << p.part << ',' << p.row_start << ',' << p.row_end << ',' << format_double(p.ba) << ','
        << (p.single_class ? 1 : 0) << '\n';
  if (!out) throw DataError("write failure: " + path.string());
}

void write_run_outputs(const NesReport& report, const Dataset& d,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "trees");

  {
    std::ofstream out(out_dir / "report.json");
    if (!out) throw DataError("cannot write report.json under " + out_dir.string());
    out << canonical_report(report, d);
    if (!out) throw DataError("write failure: report.json");
  }

  write_ba_csv(report.ba_outer_values, out_dir / "ba_undersample.csv");
  write_ba_csv(report.ba_full_values, out_dir / "ba_full.csv");

  for (const auto& rep : report.outer) {
    for (std::size_t rank = 0; rank < rep.top.size(); ++rank) {
      const auto& st = rep.top[rank];
      const std::string name =
          "o" + std::to_string(rep.index) + "_r" + std::to_string(rank + 1) + "_" + st.id() + ".txt";
      std::ofstream out(out_dir / "trees" / name);
      if (!out) throw DataError("cannot write tree file " + name);
      out << render_tree(st.tree, d);
    }
  }

  if (report.probe) write_probe_csv(*report.probe, out_dir / "probe.csv");
}

}  // namespace nesprindt
