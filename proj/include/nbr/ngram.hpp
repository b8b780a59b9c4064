#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nbr/types.hpp"

namespace nbr {

inline constexpr const char* kSentenceStart = "<s>";
inline constexpr const char* kSentenceEnd = "</s>";
inline constexpr const char* kUnknownWord = "<unk>";

struct NgramEntry {
  double log10_prob = 0.0;
  std::optional<double> log10_backoff;
};

// Backoff n-gram model loaded from ARPA text. Immutable after load; scoring
// is read-only and safe for unbounded concurrent readers.
class NgramModel {
 public:
  int max_order() const { return max_order_; }
  bool has_word(const std::string& word) const { return vocab_.count(word) > 0; }
  bool has_unk() const { return has_word(kUnknownWord); }
  std::size_t size(int order) const;
  const std::vector<std::string>& vocab() const { return vocab_list_; }

  const NgramEntry* find(std::span<const std::string> words) const;

  // Stored n-grams of one order, sorted by words; canonical for serialization.
  std::vector<std::pair<std::vector<std::string>, NgramEntry>> entries(int order) const;

  // Conditional log10 P(word | history) under standard backoff recursion:
  // the stored probability when (history, word) exists, otherwise the
  // history's backoff weight (log10 0 when the history is unstored) plus the
  // probability under the shortened history.
  double cond_log10(std::span<const std::string> history, const std::string& word) const;

 private:
  friend NgramModel load_arpa(std::istream&);

  int max_order_ = 0;
  // Key: words joined with '\x1f', per order (index order-1).
  std::vector<std::unordered_map<std::string, NgramEntry>> tables_;
  std::unordered_set<std::string> vocab_;
  std::vector<std::string> vocab_list_;  // unigram load order
};

// Parses ARPA text: \data\ header with "ngram N=count" lines, \N-grams:
// sections of "logprob words [backoff]", terminated by \end\. Accepts LF and
// CRLF. Count mismatches, dangling prefixes, positive log-probs (except the
// -99 <s> placeholder convention) and non-numeric fields raise FormatError
// with a line number.
NgramModel load_arpa(std::istream& in);
NgramModel load_arpa_text(const std::string& text);
NgramModel load_arpa_file(const std::string& path);

// Canonical ARPA serialization: entries sorted per order, shortest
// round-trip decimal strings. load(serialize(m)) reproduces every
// probability and backoff exactly.
void write_arpa(std::ostream& out, const NgramModel& model);
std::string arpa_to_string(const NgramModel& model);

enum class OovPolicy { hard_error, map_to_unk };

struct ScoreOptions {
  // Score P(w1|<s>)...P(</s>|...) instead of starting from an empty history.
  // <s> itself is context only, never scored.
  bool add_markers = false;
  OovPolicy oov = OovPolicy::hard_error;
};

// Total log10 probability of the word sequence. OOV words map to <unk> when
// the policy allows and the model has one; otherwise raises naming the word.
// Empty sequence without markers scores 0.
double score_sequence(const NgramModel& model, const Words& words,
                      const ScoreOptions& opts = {});

}  // namespace nbr
