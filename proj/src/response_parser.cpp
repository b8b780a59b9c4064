#include "nbr/response_parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>

namespace nbr {

std::string parse_note_name(ParseNote note) {
  switch (note) {
    case ParseNote::clean:
      return "clean";
    case ParseNote::recovered:
      return "recovered";
    case ParseNote::fallback:
      return "fallback";
  }
  return "fallback";
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(current);
      current.clear();
    } else if (c != '\r') {  // CRLF folded to LF first
      current += c;
    }
  }
  lines.push_back(current);
  return lines;
}

std::string to_lower(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool contains_word(const std::string& lower_line, const char* token) {
  return lower_line.find(token) != std::string::npos;
}

// Meta talk and refusals never count as a transcription line.
bool has_meta_vocabulary(const std::string& lower_line) {
  return contains_word(lower_line, "hypothesis") ||
         contains_word(lower_line, "probability") ||
         contains_word(lower_line, "rescoring") ||
         contains_word(lower_line, "cannot") || contains_word(lower_line, "unable") ||
         contains_word(lower_line, "sorry");
}

bool parse_real(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

std::optional<std::string> last_non_empty_line(const std::vector<std::string>& lines) {
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    const std::string t = trim(*it);
    if (!t.empty()) return t;
  }
  return std::nullopt;
}

// Standalone integers: digit runs not embedded in a larger word/number.
std::vector<std::pair<std::size_t, long>> standalone_integers(const std::string& text) {
  std::vector<std::pair<std::size_t, long>> found;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isdigit(static_cast<unsigned char>(text[i]))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      const bool decimal_left =
          i > 0 && text[i - 1] == '.' && i > 1 &&
          std::isdigit(static_cast<unsigned char>(text[i - 2]));
      const bool decimal_right =
          j + 1 < text.size() && text[j] == '.' &&
          std::isdigit(static_cast<unsigned char>(text[j + 1]));
      const bool left_ok =
          i == 0 || (!std::isalnum(static_cast<unsigned char>(text[i - 1])) &&
                     !decimal_left && text[i - 1] != '-');
      const bool right_ok =
          j == text.size() || (!std::isalnum(static_cast<unsigned char>(text[j])) &&
                               !decimal_right);
      if (left_ok && right_ok) {
        long value = 0;
        auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + j, value);
        if (ec == std::errc{} && ptr == text.data() + j) found.emplace_back(i, value);
      }
      i = j;
    } else {
      ++i;
    }
  }
  return found;
}

}  // namespace

ParsedLlmOutput parse_correction(const std::string& text, const NormConfig& norm) {
  const auto lines = split_lines(text);

  // Rule 1: last line mentioning "final output" or "transcription", text
  // after its last colon.
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    const std::string lower = to_lower(*it);
    if (!contains_word(lower, "final output") && !contains_word(lower, "transcription"))
      continue;
    const std::size_t colon = it->rfind(':');
    if (colon == std::string::npos) continue;
    const Words words = normalize(it->substr(colon + 1), norm);
    if (words.empty()) continue;
    return {Correction{words}, ParseNote::clean};
  }

  // Rule 2: exactly one double-quoted span.
  {
    std::vector<std::string> quoted;
    std::size_t pos = 0;
    while (true) {
      const std::size_t open = text.find('"', pos);
      if (open == std::string::npos) break;
      const std::size_t close = text.find('"', open + 1);
      if (close == std::string::npos) break;
      quoted.push_back(text.substr(open + 1, close - open - 1));
      pos = close + 1;
    }
    if (quoted.size() == 1) {
      const Words words = normalize(quoted.front(), norm);
      if (!words.empty()) return {Correction{words}, ParseNote::recovered};
    }
  }

  // Rule 3: last non-empty line free of meta-vocabulary.
  if (const auto tail = last_non_empty_line(lines)) {
    if (!has_meta_vocabulary(to_lower(*tail))) {
      const Words words = normalize(*tail, norm);
      if (!words.empty()) return {Correction{words}, ParseNote::recovered};
    }
  }

  return {};
}

ParsedLlmOutput parse_scores(const std::string& text, std::size_t n) {
  if (n < 1) return {};
  std::map<std::size_t, double> values;
  bool repaired = false;
  for (const std::string& raw : split_lines(text)) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i + 1 >= line.size()) continue;
    if (line[i] != '.' && line[i] != ':') continue;
    // Separator must be followed by whitespace so "3.5" is a number, not
    // index 3 with value 5.
    if (!std::isspace(static_cast<unsigned char>(line[i + 1]))) continue;
    std::size_t index = 0;
    {
      auto [ptr, ec] = std::from_chars(line.data(), line.data() + i, index);
      if (ec != std::errc{} || ptr != line.data() + i) continue;
    }
    double value = 0;
    if (!parse_real(line.substr(i + 1), value)) continue;
    if (index < 1 || index > n) {
      repaired = true;  // numbered noise outside the list
      continue;
    }
    if (values.count(index)) repaired = true;  // duplicate: last wins
    values[index] = value;
  }
  if (values.size() != n) return {};
  Scores scores;
  scores.values.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) scores.values.push_back(values.at(k));
  return {scores, repaired ? ParseNote::recovered : ParseNote::clean};
}

ParsedLlmOutput parse_selection(const std::string& text, std::span<const Words> hypotheses) {
  const std::size_t n = hypotheses.size();
  if (n < 1) return {};
  const std::string lower = to_lower(text);
  const auto integers = standalone_integers(text);

  // Selection vocabulary with an adjacent in-range integer (same line, within
  // a short window).
  static constexpr const char* kVocab[] = {"hypothesis", "number", "option"};
  std::optional<std::pair<std::size_t, long>> best;
  for (const char* word : kVocab) {
    std::size_t pos = 0;
    while ((pos = lower.find(word, pos)) != std::string::npos) {
      const std::size_t word_end = pos + std::string(word).size();
      for (const auto& [at, value] : integers) {
        if (value < 1 || value > static_cast<long>(n)) continue;
        const std::size_t lo = std::min(at, pos);
        const std::size_t hi = std::max(at + 1, word_end);
        if (hi - lo > 24) continue;  // adjacency window
        if (text.find('\n', lo) < hi) continue;  // same line only
        if (!best || at < best->first) best = {at, value};
      }
      pos = word_end;
    }
  }
  if (best) return {Selection{static_cast<int>(best->second)}, ParseNote::clean};

  // Response tail matched verbatim against the hypothesis texts.
  if (const auto tail = last_non_empty_line(split_lines(text))) {
    for (std::size_t i = 0; i < n; ++i) {
      if (*tail == join_words(hypotheses[i]))
        return {Selection{static_cast<int>(i) + 1}, ParseNote::clean};
    }
  }

  // First standalone in-range integer anywhere.
  for (const auto& [at, value] : integers) {
    if (value >= 1 && value <= static_cast<long>(n))
      return {Selection{static_cast<int>(value)}, ParseNote::recovered};
  }
  return {};
}

}  // namespace nbr
