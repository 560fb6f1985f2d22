#include "nesprindt/generator.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "nesprindt/sampling.hpp"

namespace nesprindt {

namespace {

constexpr std::array<const char*, 5> kPronounTypes = {"refer", "dem", "it_ex", "it_ref", "it_con"};
using PronounProbs = std::array<double, 5>;

// Class-independent baseline (refer, dem, it_ex, it_ref, it_con).
constexpr PronounProbs kNoise = {0.55, 0.15, 0.10, 0.12, 0.08};

// Dominant plant: zero pronouns concentrate on the it-types, strongly for
// children, mildly for adults.
constexpr PronounProbs kChildZero = {0.15, 0.05, 0.35, 0.28, 0.17};
constexpr PronounProbs kChildRealized = {0.62, 0.18, 0.06, 0.08, 0.06};
constexpr PronounProbs kAdultZero = {0.35, 0.10, 0.22, 0.20, 0.13};
constexpr PronounProbs kAdultRealized = {0.58, 0.16, 0.08, 0.10, 0.08};

// Single-part signal for the heterogeneity probe.
constexpr PronounProbs kPartZero = {0.04, 0.02, 0.90, 0.02, 0.02};
constexpr PronounProbs kPartRealized = {0.57, 0.16, 0.03, 0.14, 0.10};

std::size_t draw_index(const PronounProbs& probs, SeedStream& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

void shuffle_labels(std::vector<std::uint8_t>& labels, SeedStream& rng) {
  for (std::size_t i = labels.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_below(i);
    std::swap(labels[i - 1], labels[j]);
  }
}

// Part of position `pos` within a sequence of `n` rows split into `parts`
// contiguous pieces, first n % parts pieces one longer; 1-based. Matches
// partition_in_order.
std::size_t part_of(std::size_t pos, std::size_t n, std::size_t parts) {
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  const std::size_t boundary = extra * (base + 1);
  if (pos < boundary) return pos / (base + 1) + 1;
  return extra + (pos - boundary) / base + 1;
}

struct Columns {
  std::vector<std::string> cls, prn, mlu, ethn, speaker;
  std::vector<double> age;
};

void emit_group(Columns& out, bool child, std::size_t n_large, std::size_t n_small,
                const GeneratorConfig& cfg, SeedStream& rng) {
  std::vector<std::uint8_t> labels(n_large + n_small, 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(n_large), labels.end(), 1);
  shuffle_labels(labels, rng);

  const std::size_t n = labels.size();
  for (std::size_t pos = 0; pos < n; ++pos) {
    const bool zero = labels[pos] != 0;
    out.cls.push_back(zero ? "zero" : "realized");
    out.speaker.push_back(child ? "child" : "adult");

    bool signal_here = false;
    switch (cfg.plant) {
      case PlantKind::Dominant:
        signal_here = true;
        break;
      case PlantKind::None:
        signal_here = false;
        break;
      case PlantKind::HeterogeneousPart:
        signal_here = !child && part_of(pos, n, cfg.heterogeneous_parts) == cfg.signal_part;
        break;
    }

    const PronounProbs* probs = &kNoise;
    if (signal_here) {
      if (cfg.plant == PlantKind::HeterogeneousPart)
        probs = zero ? &kPartZero : &kPartRealized;
      else if (child)
        probs = zero ? &kChildZero : &kChildRealized;
      else
        probs = zero ? &kAdultZero : &kAdultRealized;
    }
    out.prn.push_back(kPronounTypes[draw_index(*probs, rng)]);

    if (child) {
      // Ages 24..120 months; the dominant plant skews zero rows young,
      // planting a numeric threshold effect near 66 months.
      double age;
      if (cfg.plant == PlantKind::Dominant && zero && rng.uniform01() < 0.7)
        age = static_cast<double>(24 + rng.uniform_below(43));  // 24..66
      else
        age = static_cast<double>(24 + rng.uniform_below(97));  // 24..120
      out.age.push_back(age);
      out.mlu.push_back(age < 84.0 ? "2" : "3");
      if (cfg.plant == PlantKind::Dominant && zero)
        out.ethn.push_back(rng.uniform01() < 0.65 ? "C" : "I");
      else
        out.ethn.push_back(rng.uniform01() < 0.5 ? "C" : "I");
    } else {
      out.age.push_back(216.0);
      out.mlu.push_back("adult");
      out.ethn.push_back("n_a");
    }
  }
}

}  // namespace

Dataset generate_dataset(const GeneratorConfig& cfg_in) {
  GeneratorConfig cfg = cfg_in;
  if (cfg.minority_rate >= 0.0) {
    if (cfg.minority_rate <= 0.0 || cfg.minority_rate >= 1.0)
      throw ConfigError("minority rate must lie in (0, 1); the class needs both levels");
    const std::size_t child_total = cfg.child_large + cfg.child_small;
    const std::size_t adult_total = cfg.adult_large + cfg.adult_small;
    cfg.child_small = static_cast<std::size_t>(std::llround(cfg.minority_rate * child_total));
    cfg.adult_small = static_cast<std::size_t>(std::llround(cfg.minority_rate * adult_total));
    cfg.child_large = child_total - cfg.child_small;
    cfg.adult_large = adult_total - cfg.adult_small;
  }
  if (cfg.child_large + cfg.adult_large == 0 || cfg.child_small + cfg.adult_small == 0)
    throw ConfigError("generator counts leave the class with one level");
  if (cfg.child_large + cfg.child_small == 0 || cfg.adult_large + cfg.adult_small == 0)
    throw ConfigError("generator counts leave a speaker group empty");
  if (cfg.plant == PlantKind::HeterogeneousPart) {
    if (cfg.heterogeneous_parts < 2) throw ConfigError("heterogeneous plant needs >= 2 parts");
    if (cfg.signal_part < 1 || cfg.signal_part > cfg.heterogeneous_parts)
      throw ConfigError("signal part out of range");
  }

  SeedStream root(cfg.seed);
  Columns cols;
  const std::size_t total =
      cfg.child_large + cfg.child_small + cfg.adult_large + cfg.adult_small;
  cols.cls.reserve(total);

  SeedStream child_rng = root.derive("generate", 0);
  emit_group(cols, true, cfg.child_large, cfg.child_small, cfg, child_rng);
  SeedStream adult_rng = root.derive("generate", 1);
  emit_group(cols, false, cfg.adult_large, cfg.adult_small, cfg, adult_rng);

  DatasetBuilder builder;
  builder.add_categorical("class", std::move(cols.cls))
      .add_categorical("PRN_TYPE", std::move(cols.prn))
      .add_categorical("MLU", std::move(cols.mlu))
      .add_categorical("ETHN_GROUP", std::move(cols.ethn))
      .add_numeric("AGE", std::move(cols.age))
      .add_categorical("SPEAKER", std::move(cols.speaker));
  return builder.build("class");
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path.string());

  for (std::size_t c = 0; c < d.n_columns(); ++c) {
    if (c > 0) out << ',';
    out << d.schema()[c].name;
  }
  out << '\n';

  char buf[64];
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    for (std::size_t c = 0; c < d.n_columns(); ++c) {
      if (c > 0) out << ',';
      if (d.is_categorical(c)) {
        out << d.schema()[c].levels[static_cast<std::size_t>(
            d.cat_code(c, static_cast<RowIndex>(r)))];
      } else {
        const double v = d.num_value(c, static_cast<RowIndex>(r));
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        (void)ec;
        out.write(buf, ptr - buf);
      }
    }
    out << '\n';
  }
  if (!out) throw DataError("write failure: " + path.string());
}

}  // namespace nesprindt
