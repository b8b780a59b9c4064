#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nbr/normalize.hpp"
#include "nbr/types.hpp"

namespace nbr {

// JSON Lines, one utterance per line:
//   {"id": "...", "reference": "..."|null, "hypotheses": [{"text": "...", "score": s}, ...]}
// Hypothesis array order defines rank. Texts and references are normalized
// on read. Throws FormatError with the offending line number.
std::vector<NBestList> read_nbest_jsonl(std::istream& in, const NormConfig& norm = {});
std::vector<NBestList> read_nbest_jsonl_file(const std::string& path, const NormConfig& norm = {});

void write_nbest_jsonl(std::ostream& out, std::span<const NBestList> lists);
void write_nbest_jsonl_file(const std::string& path, std::span<const NBestList> lists);

}  // namespace nbr
