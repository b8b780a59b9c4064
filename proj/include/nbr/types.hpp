#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nbr {

// A transcription as whitespace-free, post-normalization tokens.
using Words = std::vector<std::string>;

std::string join_words(const Words& words);

struct Hypothesis {
  Words text;
  double first_pass_score = 0.0;  // natural-log scale
  int rank = 0;                   // 1-based position in the N-best list
};

struct NBestList {
  std::string utterance_id;
  std::vector<Hypothesis> hypotheses;  // sorted by rank ascending
  std::optional<Words> reference;

  // Throws FormatError unless hypotheses are non-empty with ranks exactly 1..N.
  void validate() const;
};

struct AlignmentResult {
  int substitutions = 0;
  int insertions = 0;
  int deletions = 0;
  int ref_len = 0;

  int errors() const { return substitutions + insertions + deletions; }
};

struct UtteranceScore {
  AlignmentResult alignment;
  double wer = 0.0;
};

struct WerReport {
  std::map<std::string, UtteranceScore> per_utterance;
  // Error-weighted: total errors / total reference words, not a mean of
  // per-utterance WERs. May exceed 1.0 when insertions dominate.
  double corpus_wer = 0.0;
  long total_ref_words = 0;
};

}  // namespace nbr
