#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wic/datamodel.hpp"

namespace wic {

// Latent-sense synthetic data generator. Each lemma owns sense prototypes
// positioned on [0,1], paired into groups of two close variants; usages draw
// content tokens from a window around their prototype. The gold label of a
// usage pair is the binned prototype distance: 4 same prototype, 3 variants
// of one group, 2 adjacent groups, 1 distant groups. Lemmas are split
// disjointly across train/dev/test.
struct SynthConfig {
  std::vector<std::string> languages = {"de", "en", "sv"};
  int lemmas_per_language = 12;
  int senses_per_lemma = 8;
  int usages_per_sense = 6;
  double noise_scale = 0.10;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SynthDatasets {
  Dataset train;
  Dataset dev;
  Dataset test;
};

SynthDatasets synthesize(const SynthConfig& cfg);

// The label for a pair of senses: 4 for the same sense, down to 1 for the
// maximally distant ones; thirds of the normalized distance in between.
// Exposed for tests; integer-exact.
int synth_pair_label(int sense_a, int sense_b, int senses_per_lemma);

}  // namespace wic
