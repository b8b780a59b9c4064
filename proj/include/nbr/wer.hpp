#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "nbr/types.hpp"

namespace nbr {

// (sub+ins+del)/ref_len. Throws Error on a zero-length reference; the caller
// decides whether that means skip or abort.
double utterance_wer(const AlignmentResult& a);

// Maps a list to the 0-based index of the chosen hypothesis.
using Selector = std::function<std::size_t(const NBestList&)>;

// Index of the hypothesis with the fewest edit errors against the reference;
// ties go to the lowest rank. Throws FormatError when the reference is absent.
std::size_t oracle_index(const NBestList& list);

// Aggregates errors of the selected hypotheses. Deterministic given inputs;
// out-of-range selector results and missing references raise.
WerReport corpus_wer(std::span<const NBestList> lists, const Selector& select);

WerReport oracle_wer(std::span<const NBestList> lists);

// corpus_wer with the rank-1 hypothesis selected everywhere.
WerReport first_pass_wer(std::span<const NBestList> lists);

}  // namespace nbr
