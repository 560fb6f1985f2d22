#ifndef NESPRINDT_SAMPLING_HPP
#define NESPRINDT_SAMPLING_HPP

#include <cstdint>
#include <random>
#include <string_view>

#include "nesprindt/common.hpp"
#include "nesprindt/dataset.hpp"

namespace nesprindt {

// Deterministic, path-derived random stream. derive() is pure (it depends on
// the derivation key only, never on how many draws were consumed), so
// concurrent samplers on disjoint paths never interact. The convention used by
// the pipeline: outer repetition i draws from ("outer", i), inner repetition j
// from ("outer", i)+("inner", j)+("pct", k).
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t master_seed);

  SeedStream derive(std::string_view label, std::uint64_t index) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t next_u64();
  // Unbiased draw from [0, n), n >= 1. Rejection sampling on a power-of-two mask.
  std::uint64_t uniform_below(std::uint64_t n);
  double uniform01();  // [0, 1), 53-bit

 private:
  explicit SeedStream(std::uint64_t key, bool);
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

struct UndersampleSpec {
  double percent = 0.06;        // fraction of the large class kept, (0, 1]
  std::uint64_t repetition = 0;  // inner repetition index, for bookkeeping
};

// All small-class rows of `within` plus floor(percent * L) large-class rows
// drawn uniformly without replacement; result keeps original row order.
// Throws DataError when the draw would contain zero large-class rows.
RowIndexSet undersample_class(const Dataset& d, const RowIndexSet& within,
                              const UndersampleSpec& spec, SeedStream& rng);

// All rows of `small_level` plus exactly that many rows of the other level of
// a two-level column partitioning the data; original row order.
RowIndexSet undersample_level(const Dataset& d, std::string_view column,
                              std::string_view small_level, SeedStream& rng);

// Contiguous order-preserving partition into k parts; the first
// |within| mod k parts take one extra row.
std::vector<RowIndexSet> partition_in_order(const RowIndexSet& within, std::size_t k);

}  // namespace nesprindt

#endif
