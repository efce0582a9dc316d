#include "wic/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

namespace wic {

namespace {

// Generator constants; fixed so synthetic gold is reproducible.
constexpr int kContentVocabulary = 48;  // per language
constexpr int kContentTokensPerUsage = 8;
constexpr int kFillerTokensPerUsage = 3;   // fixed function words per language
constexpr double kVariantOffset = 0.03;   // spacing of the two variants of a group

struct GeneratedUsage {
  std::string text;
  std::size_t target_start = 0;
  std::size_t target_end = 0;
  int sense = 0;
};

// Senses pair up into groups of two close variants; groups are spread
// evenly over [0,1]. Within a group the token windows overlap heavily,
// across groups not at all (for the default window width).
double sense_position(int sense, int senses_per_lemma) {
  const int group = sense / 2;
  const int groups = (senses_per_lemma + 1) / 2;
  const double center =
      groups > 1 ? static_cast<double>(group) / static_cast<double>(groups - 1) : 0.5;
  const double offset = sense % 2 == 0 ? -kVariantOffset : kVariantOffset;
  return std::clamp(center + offset, 0.0, 1.0);
}

GeneratedUsage make_usage(const std::string& language, const std::string& lemma,
                          int sense, int senses_per_lemma, double noise_scale,
                          std::mt19937_64& rng) {
  const double position = sense_position(sense, senses_per_lemma);

  // Uniform window around the sense position: nearby senses share a graded
  // fraction of their token windows, distant senses none.
  std::uniform_real_distribution<double> noise(-noise_scale, noise_scale);

  std::vector<std::string> tokens;
  tokens.reserve(kContentTokensPerUsage + kFillerTokensPerUsage + 1);
  for (int t = 0; t < kContentTokensPerUsage; ++t) {
    const double x = std::clamp(position + noise(rng), 0.0, 1.0);
    const int index =
        static_cast<int>(std::lround(x * static_cast<double>(kContentVocabulary - 1)));
    tokens.push_back(language + "_w" + std::to_string(index));
  }
  // Fixed function words shared by every usage of the language.
  for (int t = 0; t < kFillerTokensPerUsage; ++t)
    tokens.push_back(language + "_f" + std::to_string(t));

  std::uniform_int_distribution<std::size_t> slot_pick(0, tokens.size());
  const std::size_t slot = slot_pick(rng);
  tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(slot), lemma);

  GeneratedUsage usage;
  usage.sense = sense;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) usage.text += ' ';
    if (i == slot) usage.target_start = usage.text.size();
    usage.text += tokens[i];
    if (i == slot) usage.target_end = usage.text.size();
  }
  return usage;
}

}  // namespace

void SynthConfig::validate() const {
  if (languages.empty()) throw Error("invalid-config", "need at least one language");
  if (lemmas_per_language < 3)
    throw Error("invalid-config",
                "need >= 3 lemmas per language for disjoint train/dev/test splits");
  if (senses_per_lemma < 1 || usages_per_sense < 1)
    throw Error("invalid-config", "sense and usage counts must be >= 1");
  if (noise_scale < 0.0) throw Error("invalid-config", "noise_scale must be >= 0");
  for (const auto& language : languages)
    if (language.empty()) throw Error("invalid-config", "language tags must be non-empty");
}

int synth_pair_label(int sense_a, int sense_b, int senses_per_lemma) {
  (void)senses_per_lemma;
  if (sense_a == sense_b) return 4;          // identical prototype
  if (sense_a / 2 == sense_b / 2) return 3;  // variants of the same group
  const int group_gap = std::abs(sense_a / 2 - sense_b / 2);
  return group_gap == 1 ? 2 : 1;  // adjacent groups vs distant groups
}

SynthDatasets synthesize(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);

  std::vector<JudgedInstance> buckets[3];

  for (const auto& language : cfg.languages) {
    // Disjoint lemma split, roughly 70/10/20 with at least one lemma each.
    const int n = cfg.lemmas_per_language;
    std::vector<int> lemma_ids(static_cast<std::size_t>(n));
    std::iota(lemma_ids.begin(), lemma_ids.end(), 0);
    std::shuffle(lemma_ids.begin(), lemma_ids.end(), rng);

    int n_dev = std::max(1, static_cast<int>(std::lround(0.1 * n)));
    int n_test = std::max(1, static_cast<int>(std::lround(0.2 * n)));
    int n_train = n - n_dev - n_test;
    if (n_train < 1) {
      n_train = 1;
      n_dev = 1;
      n_test = n - 2;
    }

    auto split_of = [&](int position) {
      if (position < n_train) return 0;
      if (position < n_train + n_dev) return 1;
      return 2;
    };

    for (int position = 0; position < n; ++position) {
      const int lemma_id = lemma_ids[static_cast<std::size_t>(position)];
      const std::string lemma = language + "_lemma" + std::to_string(lemma_id);
      const int bucket = split_of(position);

      std::vector<GeneratedUsage> usages;
      usages.reserve(static_cast<std::size_t>(cfg.senses_per_lemma) *
                     static_cast<std::size_t>(cfg.usages_per_sense));
      for (int sense = 0; sense < cfg.senses_per_lemma; ++sense)
        for (int u = 0; u < cfg.usages_per_sense; ++u)
          usages.push_back(make_usage(language, lemma, sense, cfg.senses_per_lemma,
                                      cfg.noise_scale, rng));

      // All within-lemma pairs, then balanced across the four labels so the
      // scarce extreme levels are not drowned out.
      std::array<std::vector<std::pair<std::size_t, std::size_t>>, 4> by_label;
      for (std::size_t a = 0; a < usages.size(); ++a)
        for (std::size_t b = a + 1; b < usages.size(); ++b) {
          const int label =
              synth_pair_label(usages[a].sense, usages[b].sense, cfg.senses_per_lemma);
          by_label[static_cast<std::size_t>(label - 1)].push_back({a, b});
        }
      std::size_t cap = usages.size() * usages.size();
      for (auto& group : by_label)
        if (!group.empty()) cap = std::min(cap, group.size());
      for (auto& group : by_label) {
        std::shuffle(group.begin(), group.end(), rng);
        group.resize(std::min(group.size(), cap));
        std::sort(group.begin(), group.end());
      }

      for (std::size_t level = 0; level < 4; ++level) {
        for (const auto& [a, b] : by_label[level]) {
          const std::string id =
              lemma + ":" + std::to_string(a) + "-" + std::to_string(b);
          buckets[bucket].emplace_back(
              id, language, lemma,
              Usage(usages[a].text, usages[a].target_start, usages[a].target_end),
              Usage(usages[b].text, usages[b].target_start, usages[b].target_end),
              OrdinalLabel(synth_pair_label(usages[a].sense, usages[b].sense,
                                            cfg.senses_per_lemma)));
        }
      }
    }
  }

  return {Dataset(std::move(buckets[0]), Split::train),
          Dataset(std::move(buckets[1]), Split::dev),
          Dataset(std::move(buckets[2]), Split::test)};
}

}  // namespace wic
