#include "nbr/wer.hpp"

#include "nbr/align.hpp"
#include "nbr/error.hpp"

namespace nbr {

double utterance_wer(const AlignmentResult& a) {
  if (a.ref_len <= 0)
    throw Error("utterance_wer: zero-length reference");
  return static_cast<double>(a.errors()) / a.ref_len;
}

namespace {

const Words& require_reference(const NBestList& list) {
  if (!list.reference)
    throw FormatError("utterance '" + list.utterance_id + "' has no reference");
  if (list.reference->empty())
    throw Error("utterance '" + list.utterance_id + "' has a zero-length reference");
  return *list.reference;
}

}  // namespace

std::size_t oracle_index(const NBestList& list) {
  const Words& ref = require_reference(list);
  list.validate();
  std::size_t best = 0;
  int best_errors = align(ref, list.hypotheses[0].text).errors();
  for (std::size_t i = 1; i < list.hypotheses.size(); ++i) {
    const int e = align(ref, list.hypotheses[i].text).errors();
    if (e < best_errors) {  // ties keep the lowest rank
      best_errors = e;
      best = i;
    }
  }
  return best;
}

WerReport corpus_wer(std::span<const NBestList> lists, const Selector& select) {
  WerReport report;
  long total_errors = 0;
  for (const NBestList& list : lists) {
    const Words& ref = require_reference(list);
    const std::size_t idx = select(list);
    if (idx >= list.hypotheses.size())
      throw Error("selector returned index " + std::to_string(idx) +
                  " for utterance '" + list.utterance_id + "' with " +
                  std::to_string(list.hypotheses.size()) + " hypotheses");
    UtteranceScore score;
    score.alignment = align(ref, list.hypotheses[idx].text);
    score.wer = utterance_wer(score.alignment);
    total_errors += score.alignment.errors();
    report.total_ref_words += score.alignment.ref_len;
    report.per_utterance.emplace(list.utterance_id, score);
  }
  report.corpus_wer = report.total_ref_words > 0
                          ? static_cast<double>(total_errors) / report.total_ref_words
                          : 0.0;
  return report;
}

WerReport oracle_wer(std::span<const NBestList> lists) {
  return corpus_wer(lists, [](const NBestList& l) { return oracle_index(l); });
}

WerReport first_pass_wer(std::span<const NBestList> lists) {
  return corpus_wer(lists, [](const NBestList&) { return std::size_t{0}; });
}

}  // namespace nbr
