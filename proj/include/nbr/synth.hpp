#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nbr/types.hpp"

namespace nbr {

// Word-level noisy channel over a reference transcription. Per word position
// one draw decides substitute / delete / keep (sub_rate + del_rate <= 1);
// insertions stutter the preceding word. Substitutions sample the word's
// weighted confusion alternatives; words without an entry are left intact.
struct ChannelConfig {
  double sub_rate = 0.0;
  double ins_rate = 0.0;
  double del_rate = 0.0;
  std::map<std::string, std::map<std::string, double>> confusion_table;
  int n = 1;                                  // list size
  std::optional<int> include_reference_rank;  // nullopt = never
  uint64_t seed = 0;
  double score_noise_sigma = 0.0;

  void validate() const;  // throws Error on rate or size violations
};

struct SynthStats {
  int duplicate_hypotheses = 0;  // duplicates kept after resampling gave up
  long corruption_draws = 0;     // substitutions + insertions + deletions applied
};

// Pseudo acoustic score: -(corruption count) + Gaussian(0, sigma), hypotheses
// sorted by score descending, ranks 1..n. Reference inserted at
// include_reference_rank when set. Byte-identical output for a fixed seed.
NBestList generate(const Words& reference, const std::string& utterance_id,
                   const ChannelConfig& cfg, SynthStats* stats = nullptr);

struct SynthCorpus {
  std::vector<NBestList> lists;
  std::string manifest_json;  // config echo + stats, stable key order
};

// Child seed per utterance is mix_seed(cfg.seed, index), so generation order
// and parallelism cannot change the corpus.
SynthCorpus generate_corpus(std::span<const Words> references, const ChannelConfig& cfg);

}  // namespace nbr
