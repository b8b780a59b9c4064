#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nbr/normalize.hpp"
#include "nbr/types.hpp"

namespace nbr {

// clean: the primary grammar rule matched. recovered: a lower-priority rule
// or repair fired. fallback: nothing matched; the caller substitutes the
// rank-1 hypothesis and counts the event.
enum class ParseNote { clean, recovered, fallback };

std::string parse_note_name(ParseNote note);

struct Correction {
  Words text;
};

struct Scores {
  std::vector<double> values;  // one per hypothesis
};

struct Selection {
  int index = 1;  // 1-based
};

struct ParsedLlmOutput {
  // Empty exactly when note == fallback.
  std::optional<std::variant<Correction, Scores, Selection>> payload;
  ParseNote note = ParseNote::fallback;

  bool is_fallback() const { return note == ParseNote::fallback; }
};

// Priority grammar: (1) text after the last colon on the last line mentioning
// "final output" or "transcription"; (2) the single double-quoted sentence;
// (3) the last non-empty line when it carries no meta-vocabulary
// ("hypothesis", "probability", "rescoring"). Rules 2-3 mark recovered.
// Results are normalized. Total: never throws on any byte sequence.
ParsedLlmOutput parse_correction(const std::string& text, const NormConfig& norm = {});

// Numbered lines "k. v" or "k: v" with v decimal or scientific. Duplicate
// index: last wins, recovered. Fewer than n values: fallback.
ParsedLlmOutput parse_scores(const std::string& text, std::size_t n);

// First standalone integer in [1, n] adjacent to selection vocabulary
// ("hypothesis", "number", "option"); else the response tail matched exactly
// against the hypothesis texts; else the first standalone in-range integer
// anywhere (recovered).
ParsedLlmOutput parse_selection(const std::string& text, std::span<const Words> hypotheses);

}  // namespace nbr
