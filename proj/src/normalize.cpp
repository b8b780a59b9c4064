#include "nbr/normalize.hpp"

#include <cctype>

#include "nbr/error.hpp"

namespace nbr {

std::string join_words(const Words& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ' ';
    out += words[i];
  }
  return out;
}

Words normalize(std::string_view raw, const NormConfig& cfg) {
  Words words;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      words.push_back(token);
      token.clear();
    }
  };
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
      continue;
    }
    if (cfg.strip_chars.find(c) != std::string::npos) continue;
    if (cfg.lowercase && c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    token += c;
  }
  flush();
  return words;
}

void NBestList::validate() const {
  if (hypotheses.empty())
    throw FormatError("utterance '" + utterance_id + "': empty hypothesis list");
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (hypotheses[i].rank != static_cast<int>(i) + 1)
      throw FormatError("utterance '" + utterance_id + "': rank " +
                        std::to_string(hypotheses[i].rank) + " at position " +
                        std::to_string(i + 1) + "; ranks must be exactly 1..N");
  }
}

}  // namespace nbr
