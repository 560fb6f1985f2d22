#ifndef NESPRINDT_REPORT_IO_HPP
#define NESPRINDT_REPORT_IO_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "nesprindt/nesprindt.hpp"

namespace nesprindt {

// JSON run configuration as read from --config. Flags layer on top (flags win).
struct FileConfig {
  std::string class_column = "class";
  std::map<std::string, ColumnKind> column_kinds;
  RunConfig run;
  std::size_t probe_parts = 0;  // 0: no probe attached to cmd_run reports
};

FileConfig parse_config(const nlohmann::json& j);
FileConfig load_config(const std::filesystem::path& path);

std::vector<ForbiddenCombination> parse_forbidden(const nlohmann::json& j);

// Canonical serialization: sorted keys, two-space indent, trailing newline,
// no timestamps.
std::string canonical_report(const NesReport& report, const Dataset& d);

// report.json, ba_undersample.csv, ba_full.csv and trees/*.txt under out_dir.
void write_run_outputs(const NesReport& report, const Dataset& d,
                       const std::filesystem::path& out_dir);

void write_ba_csv(const std::vector<BaRecord>& records, const std::filesystem::path& path);
void write_probe_csv(const std::vector<ProbePart>& parts, const std::filesystem::path& path);

}  // namespace nesprindt

#endif
