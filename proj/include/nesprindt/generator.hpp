#ifndef NESPRINDT_GENERATOR_HPP
#define NESPRINDT_GENERATOR_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include "nesprindt/dataset.hpp"

namespace nesprindt {

// Effect layout planted into the synthetic corpus.
//   Dominant: a strong pronoun-type effect plus a child age-threshold effect;
//             stronger among children than adults, so full-sample scores trail
//             undersample scores the way heavily child-weighted training
//             predicts.
//   None:     predictors independent of the class (per speaker group the class
//             share is constant, so pooled predictors stay uninformative).
//   HeterogeneousPart: like None except one contiguous part of the adult rows
//             carries a strong pronoun-type effect.
enum class PlantKind : std::uint8_t { Dominant, None, HeterogeneousPart };

struct GeneratorConfig {
  // Default counts reproduce the reference shape: 2,899/326 child and
  // 16,543/782 adult rows for class realized/zero.
  std::size_t child_large = 2899;
  std::size_t child_small = 326;
  std::size_t adult_large = 16543;
  std::size_t adult_small = 782;

  PlantKind plant = PlantKind::Dominant;
  std::size_t heterogeneous_parts = 8;  // HeterogeneousPart: partition count
  std::size_t signal_part = 5;          // 1-based part carrying the signal

  // < 0 keeps the explicit counts; otherwise overrides the small-class share
  // per speaker group while keeping group totals.
  double minority_rate = -1.0;

  std::uint64_t seed = 0;
};

// Columns: class, PRN_TYPE, MLU, ETHN_GROUP, AGE, SPEAKER.
Dataset generate_dataset(const GeneratorConfig& cfg);

void write_csv(const Dataset& d, const std::filesystem::path& path);

}  // namespace nesprindt

#endif
