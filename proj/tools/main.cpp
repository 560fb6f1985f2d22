// nesprindt: nested undersampling around significance-tested decision trees
// for doubly imbalanced binary classification.
//
// Subcommands:
//   run       full pipeline; writes report.json, ba_undersample.csv,
//             ba_full.csv and rendered top trees
//   probe     ordered-partition heterogeneity probe; writes probe.csv
//   render    print a tree from an existing report.json
//   generate  synthetic corpus with configurable planted effects
//
// Exit codes: 0 ok, 1 configuration error, 2 data error, 3 empty result
// (every tree rejected by the interpretability filter).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nesprindt/generator.hpp"
#include "nesprindt/report_io.hpp"

namespace fs = std::filesystem;
using namespace nesprindt;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitEmpty = 3;

struct CommonArgs {
  std::string data;
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t threads = 1;
};

FileConfig resolve_config(const CommonArgs& args) {
  FileConfig cfg;
  if (!args.config.empty()) cfg = load_config(args.config);
  if (args.seed_set) cfg.run.master_seed = args.seed;  // flags win
  return cfg;
}

Dataset load_data(const CommonArgs& args, const FileConfig& cfg) {
  if (args.data.empty()) throw ConfigError("--data is required");
  return load_csv(args.data, cfg.column_kinds, cfg.class_column);
}

void print_summary(const NesReport& report) {
  const ScoredTree& by_outer = best_tree(report, BestCriterion::ByOuter);
  const ScoredTree& by_full = best_tree(report, BestCriterion::ByFull);
  std::printf("trees scored: %zu undersample / %zu full\n", report.ba_outer_values.size(),
              report.ba_full_values.size());
  std::printf("best tree by undersample ba: %s (ba=%.4f)\n", by_outer.id().c_str(),
              by_outer.ba_outer);
  std::printf("best tree by full-sample ba: %s (ba=%.4f)\n", by_full.id().c_str(), by_full.full->ba);
  std::printf("best trees identical: %s\n", report.best_identical ? "yes" : "no");
  const auto& ens_a = report.outer[report.ensemble_a_best_rep].ensemble;
  std::printf("best strategy-A ensemble: outer %zu (ba=%.4f)\n", report.ensemble_a_best_rep,
              ens_a.score.ba);
  std::printf("strategy-B ensemble: ba=%.4f\n", report.ensemble_b.score.ba);
}

int cmd_run(const CommonArgs& args) {
  FileConfig cfg = resolve_config(args);
  Dataset d = load_data(args, cfg);

  NesReport report = nesprindt_run(d, cfg.run, args.threads);
  if (cfg.probe_parts >= 2) {
    ProbeConfig probe_cfg{cfg.run.nesting, cfg.probe_parts, cfg.run.tree, cfg.run.predictors};
    report.probe = heterogeneity_probe(d, probe_cfg);
  }

  fs::create_directories(args.out);
  write_run_outputs(report, d, args.out);
  print_summary(report);
  return 0;
}

int cmd_probe(const CommonArgs& args, std::size_t parts, bool parts_set) {
  FileConfig cfg = resolve_config(args);
  if (parts_set) cfg.probe_parts = parts;
  if (cfg.probe_parts < 2) throw ConfigError("probe needs --parts >= 2");
  Dataset d = load_data(args, cfg);

  ProbeConfig probe_cfg{cfg.run.nesting, cfg.probe_parts, cfg.run.tree, cfg.run.predictors};
  const auto result = heterogeneity_probe(d, probe_cfg);

  fs::create_directories(args.out);
  write_probe_csv(result, fs::path(args.out) / "probe.csv");
  for (const auto& p : result)
    std::printf("part %zu rows %zu-%zu ba=%.4f%s\n", p.part, p.row_start, p.row_end, p.ba,
                p.single_class ? " (single class)" : "");
  return 0;
}

int cmd_render(const std::string& report_path, const std::string& tree_id) {
  std::ifstream in(report_path);
  if (!in) throw ConfigError("cannot open report: " + report_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("report parse error: " + std::string(e.what()));
  }

  std::string wanted = tree_id;
  if (tree_id == "best_outer") wanted = j.at("best_by_outer").get<std::string>();
  if (tree_id == "best_full") wanted = j.at("best_by_full").get<std::string>();

  for (const auto& rep : j.at("outer"))
    for (const auto& st : rep.at("top"))
      if (st.at("id").get<std::string>() == wanted) {
        std::fputs(render_tree(tree_doc_from_json(st.at("tree"))).c_str(), stdout);
        return 0;
      }
  throw ConfigError("unknown tree id: " + tree_id);
}

int cmd_generate(const std::string& out_path, const GeneratorConfig& cfg) {
  const Dataset d = generate_dataset(cfg);
  write_csv(d, out_path);
  const auto [large, small] = class_counts(d);
  std::printf("wrote %zu rows (class large=%zu small=%zu) to %s\n", d.n_rows(), large, small,
              out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nested undersampling for doubly imbalanced classification"};
  app.require_subcommand(1);

  CommonArgs args;
  std::size_t parts = 8;
  bool parts_set = false;

  auto add_common = [&](CLI::App* cmd, bool needs_data) {
    if (needs_data) cmd->add_option("--data", args.data, "input CSV")->required();
    cmd->add_option("--config", args.config, "JSON run configuration");
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--seed", args.seed, "master seed (overrides config)")
        ->each([&](const std::string&) { args.seed_set = true; });
    cmd->add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  CLI::App* run = app.add_subcommand("run", "run the nested undersampling pipeline");
  add_common(run, true);

  CLI::App* probe = app.add_subcommand("probe", "heterogeneity probe over ordered parts");
  add_common(probe, true);
  probe->add_option("--parts", parts, "number of ordered parts (>= 2)")
      ->each([&](const std::string&) { parts_set = true; });

  CLI::App* render = app.add_subcommand("render", "print a tree from a report");
  std::string report_path = "report.json";
  std::string tree_id = "best_outer";
  render->add_option("--report", report_path, "report.json path");
  render->add_option("--tree-id", tree_id, "tree id, or best_outer / best_full");

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic corpus");
  GeneratorConfig gen_cfg;
  std::string gen_out = "corpus.csv";
  std::string plant = "dominant";
  double minority_rate = -1.0;
  std::vector<std::size_t> counts;
  generate->add_option("--out", gen_out, "output CSV path");
  generate->add_option("--seed", gen_cfg.seed, "generator seed");
  generate->add_option("--plant", plant, "dominant | none | part5");
  generate->add_option("--minority-rate", minority_rate,
                       "override the small-class share per speaker group");
  generate->add_option("--counts", counts,
                       "child_large child_small adult_large adult_small")
      ->expected(4);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(args);
    if (probe->parsed()) return cmd_probe(args, parts, parts_set);
    if (render->parsed()) return cmd_render(report_path, tree_id);
    if (generate->parsed()) {
      if (plant == "dominant")
        gen_cfg.plant = PlantKind::Dominant;
      else if (plant == "none")
        gen_cfg.plant = PlantKind::None;
      else if (plant == "part5")
        gen_cfg.plant = PlantKind::HeterogeneousPart;
      else
        throw ConfigError("--plant must be dominant, none or part5");
      gen_cfg.minority_rate = minority_rate;
      if (!counts.empty()) {
        gen_cfg.child_large = counts[0];
        gen_cfg.child_small = counts[1];
        gen_cfg.adult_large = counts[2];
        gen_cfg.adult_small = counts[3];
      }
      return cmd_generate(gen_out, gen_cfg);
    }
  } catch (const EmptyResultError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitEmpty;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
