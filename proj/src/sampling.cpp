#include "nesprindt/sampling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace nesprindt {

namespace {

// splitmix64 finalizer; full avalanche on the derivation key.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char ch : label) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

SeedStream::SeedStream(std::uint64_t master_seed)
    : key_(mix64(master_seed)), engine_(key_) {}

SeedStream::SeedStream(std::uint64_t key, bool) : key_(key), engine_(key) {}

SeedStream SeedStream::derive(std::string_view label, std::uint64_t index) const {
  std::uint64_t k = key_;
  k = mix64(k ^ hash_label(label));
  k = mix64(k ^ index);
  return SeedStream(k, true);
}

std::uint64_t SeedStream::next_u64() { return engine_(); }

std::uint64_t SeedStream::uniform_below(std::uint64_t n) {
  if (n <= 1) return 0;
  const int bits = std::bit_width(n - 1);
  const std::uint64_t mask = (bits >= 64) ? ~0ULL : ((1ULL << bits) - 1);
  while (true) {
    const std::uint64_t v = engine_() & mask;
    if (v < n) return v;
  }
}

double SeedStream::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

namespace {

// Selection sampling: emits k of n candidates in order, one bounded draw per
// candidate scanned.
template <typename Take>
void sample_in_order(std::size_t n, std::size_t k, SeedStream& rng, Take&& take) {
  std::size_t remaining = k;
  for (std::size_t t = 0; t < n && remaining > 0; ++t) {
    if (rng.uniform_below(n - t) < remaining) {
      take(t);
      --remaining;
    }
  }
}

}  // namespace

RowIndexSet undersample_class(const Dataset& d, const RowIndexSet& within,
                              const UndersampleSpec& spec, SeedStream& rng) {
  if (spec.percent <= 0.0 || spec.percent > 1.0)
    throw ConfigError("undersample percent must be in (0, 1]");

  RowIndexSet small_rows, large_rows;
  const auto& codes = d.cat_column(d.class_column());
  for (RowIndex r : within) {
    if (codes[r] == d.small_code())
      small_rows.push_back(r);
    else
      large_rows.push_back(r);
  }
  if (small_rows.empty() || large_rows.empty())
    throw DataError("undersample_class requires both classes in the sample");

  // Tiny epsilon so decimal percents keep their decimal floor (0.3 * 10 is
  // 2.999… in binary).
  const auto keep =
      static_cast<std::size_t>(std::floor(spec.percent * static_cast<double>(large_rows.size()) + 1e-9));
  if (keep == 0)
    throw DataError("undersample percent " + std::to_string(spec.percent) +
                    " yields zero large-class rows; a one-class training set cannot split");

  RowIndexSet selected;
  selected.reserve(keep);
  sample_in_order(large_rows.size(), keep, rng,
                  [&](std::size_t t) { selected.push_back(large_rows[t]); });

  RowIndexSet out;
  out.reserve(small_rows.size() + selected.size());
  std::merge(small_rows.begin(), small_rows.end(), selected.begin(), selected.end(),
             std::back_inserter(out));
  return out;
}

RowIndexSet undersample_level(const Dataset& d, std::string_view column,
                              std::string_view small_level, SeedStream& rng) {
  const std::size_t col = d.column_index(column);
  if (!d.is_categorical(col))
    throw DataError("nesting column is not categorical: " + std::string(column));
  if (d.schema()[col].levels.size() != 2)
    throw DataError("nesting column " + std::string(column) + " must have exactly two levels, has " +
                    std::to_string(d.schema()[col].levels.size()));
  const std::int32_t small_code = d.level_code(col, small_level);

  RowIndexSet small_rows, large_rows;
  const auto& codes = d.cat_column(col);
  for (std::size_t r = 0; r < codes.size(); ++r) {
    if (codes[r] == small_code)
      small_rows.push_back(static_cast<RowIndex>(r));
    else
      large_rows.push_back(static_cast<RowIndex>(r));
  }
  if (small_rows.empty()) throw DataError("nesting level has no rows: " + std::string(small_level));
  if (large_rows.size() < small_rows.size())
    throw DataError("nesting level '" + std::string(small_level) +
                    "' is not the smaller one; nothing to undersample");

  RowIndexSet selected;
  selected.reserve(small_rows.size());
  sample_in_order(large_rows.size(), small_rows.size(), rng,
                  [&](std::size_t t) { selected.push_back(large_rows[t]); });

  RowIndexSet out;
  out.reserve(small_rows.size() * 2);
  std::merge(small_rows.begin(), small_rows.end(), selected.begin(), selected.end(),
             std::back_inserter(out));
  return out;
}

std::vector<RowIndexSet> partition_in_order(const RowIndexSet& within, std::size_t k) {
  if (k < 2) throw ConfigError("partition needs k >= 2");
  if (k > within.size())
    throw ConfigError("cannot partition " + std::to_string(within.size()) + " rows into " +
                      std::to_string(k) + " parts");

  const std::size_t base = within.size() / k;
  const std::size_t extra = within.size() % k;  // first `extra` parts get one more row
  std::vector<RowIndexSet> parts;
  parts.reserve(k);
  std::size_t pos = 0;
  for (std::size_t p = 0; p < k; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    parts.emplace_back(within.begin() + pos, within.begin() + pos + len);
    pos += len;
  }
  return parts;
}

}  // namespace nesprindt
