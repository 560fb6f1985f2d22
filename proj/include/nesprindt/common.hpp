#ifndef NESPRINDT_COMMON_HPP
#define NESPRINDT_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nesprindt {

using RowIndex = std::uint32_t;

// Ordered, duplicate-free list of row positions into a Dataset. All sampling
// operations emit these in original row order.
using RowIndexSet = std::vector<RowIndex>;

// Binary class labels. The large/small designation is fixed at load time from
// full-data counts and never re-derived inside subsamples.
enum class ClassLabel : std::uint8_t { Large = 0, Small = 1 };

// Configuration problems: bad flags, malformed config files, invalid counts.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Data problems: unreadable or malformed CSV, schema violations, nesting
// misconfiguration.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Every candidate tree was rejected by the interpretability filter.
class EmptyResultError : public std::runtime_error {
 public:
  explicit EmptyResultError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nesprindt

#endif
