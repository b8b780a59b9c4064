#include "nbr/ngram.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nbr/error.hpp"

namespace nbr {

namespace {

constexpr char kSep = '\x1f';

std::string make_key(std::span<const std::string> words) {
  std::string key;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) key += kSep;
    key += words[i];
  }
  return key;
}

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> words;
  std::size_t start = 0;
  while (true) {
    const std::size_t sep = key.find(kSep, start);
    if (sep == std::string::npos) {
      words.push_back(key.substr(start));
      return words;
    }
    words.push_back(key.substr(start, sep - start));
    start = sep + 1;
  }
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool parse_double(std::string_view s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

bool parse_count(std::string_view s, std::size_t& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw FormatError("arpa line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::size_t NgramModel::size(int order) const {
  if (order < 1 || order > max_order_) return 0;
  return tables_[static_cast<std::size_t>(order) - 1].size();
}

const NgramEntry* NgramModel::find(std::span<const std::string> words) const {
  const int order = static_cast<int>(words.size());
  if (order < 1 || order > max_order_) return nullptr;
  const auto& table = tables_[static_cast<std::size_t>(order) - 1];
  const auto it = table.find(make_key(words));
  return it == table.end() ? nullptr : &it->second;
}

std::vector<std::pair<std::vector<std::string>, NgramEntry>> NgramModel::entries(
    int order) const {
  std::vector<std::pair<std::vector<std::string>, NgramEntry>> out;
  if (order < 1 || order > max_order_) return out;
  for (const auto& [key, entry] : tables_[static_cast<std::size_t>(order) - 1])
    out.emplace_back(split_key(key), entry);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

double NgramModel::cond_log10(std::span<const std::string> history,
                              const std::string& word) const {
  const auto max_ctx = static_cast<std::size_t>(max_order_) - 1;
  if (history.size() > max_ctx) history = history.subspan(history.size() - max_ctx);
  double backoff_sum = 0.0;
  while (true) {
    std::vector<std::string> ngram(history.begin(), history.end());
    ngram.push_back(word);
    if (const NgramEntry* e = find(ngram)) return backoff_sum + e->log10_prob;
    if (history.empty())
      throw Error("word not in model vocabulary: '" + word + "'");
    // Unstored histories back off with weight 1 (log10 0).
    if (const NgramEntry* h = find(history); h && h->log10_backoff)
      backoff_sum += *h->log10_backoff;
    history = history.subspan(1);
  }
}

NgramModel load_arpa(std::istream& in) {
  NgramModel model;
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  auto next_line_required = [&]() {
    if (!next_line()) throw FormatError("arpa: unterminated model (missing \\end\\)");
  };

  // \data\ header.
  bool saw_data = false;
  while (next_line()) {
    if (line.empty()) continue;
    if (line == "\\data\\") {
      saw_data = true;
      break;
    }
    fail(line_no, "expected \\data\\ header, got '" + line + "'");
  }
  if (!saw_data) throw FormatError("arpa: missing \\data\\ header");

  std::map<int, std::size_t> declared;
  bool have_marker = false;
  while (true) {
    next_line_required();
    if (line.empty()) break;
    if (line[0] == '\\') {
      have_marker = true;
      break;
    }
    if (line.rfind("ngram ", 0) != 0)
      fail(line_no, "expected 'ngram N=count', got '" + line + "'");
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'ngram N=count'");
    std::size_t order = 0, count = 0;
    if (!parse_count(line.substr(6, eq - 6), order) || order < 1)
      fail(line_no, "bad ngram order in '" + line + "'");
    if (!parse_count(line.substr(eq + 1), count))
      fail(line_no, "bad ngram count in '" + line + "'");
    declared[static_cast<int>(order)] = count;
  }
  if (declared.empty()) throw FormatError("arpa: header declares no ngram orders");
  model.max_order_ = declared.rbegin()->first;
  model.tables_.resize(static_cast<std::size_t>(model.max_order_));

  // \N-grams: sections until \end\.
  bool terminated = false;
  while (true) {
    if (!have_marker) {
      next_line_required();
      if (line.empty()) continue;
      if (line[0] != '\\')
        fail(line_no, "expected \\N-grams: section or \\end\\, got '" + line + "'");
    }
    have_marker = false;
    if (line == "\\end\\") {
      terminated = true;
      break;
    }
    int order = 0;
    {
      const std::size_t dash = line.find("-grams:");
      std::size_t v = 0;
      if (dash == std::string::npos || dash + 7 != line.size() ||
          !parse_count(std::string_view(line).substr(1, dash - 1), v) || v < 1)
        fail(line_no, "expected \\N-grams: section or \\end\\, got '" + line + "'");
      order = static_cast<int>(v);
    }
    if (order > model.max_order_)
      fail(line_no, "section order " + std::to_string(order) +
                        " exceeds the declared maximum " +
                        std::to_string(model.max_order_));
    auto& table = model.tables_[static_cast<std::size_t>(order) - 1];
    const std::size_t want = declared.count(order) ? declared[order] : 0;
    const std::size_t section_line = line_no;
    const auto n = static_cast<std::size_t>(order);

    while (true) {
      next_line_required();
      if (line.empty()) continue;
      if (line[0] == '\\') {
        have_marker = true;
        break;
      }
      const auto fields = split_ws(line);
      if (fields.size() != n + 1 && fields.size() != n + 2)
        fail(line_no, "expected 'logprob " + std::to_string(order) +
                          " word(s) [backoff]', got " +
                          std::to_string(fields.size()) + " fields");
      NgramEntry entry;
      if (!parse_double(fields[0], entry.log10_prob))
        fail(line_no, "non-numeric log probability '" + fields[0] + "'");
      if (fields.size() == n + 2) {
        double bow = 0;
        if (!parse_double(fields[n + 1], bow))
          fail(line_no, "non-numeric backoff weight '" + fields[n + 1] + "'");
        entry.log10_backoff = bow;
      }
      std::vector<std::string> words(fields.begin() + 1, fields.begin() + 1 + n);
      if (entry.log10_prob > 0.0)
        fail(line_no, "positive log probability for '" + join_words(words) + "'");
      if (order > 1) {
        const std::span<const std::string> prefix(words.data(), n - 1);
        if (!model.find(prefix))
          fail(line_no, "dangling prefix: '" + join_words({prefix.begin(), prefix.end()}) +
                            "' missing from the " + std::to_string(order - 1) +
                            "-gram table");
      }
      if (order == 1 && model.vocab_.insert(words[0]).second)
        model.vocab_list_.push_back(words[0]);
      if (!table.emplace(make_key(words), entry).second)
        fail(line_no,
             "duplicate " + std::to_string(order) + "-gram '" + join_words(words) + "'");
      if (table.size() > want)
        fail(line_no, "section \\" + std::to_string(order) +
                          "-grams: exceeds the declared count " + std::to_string(want));
    }
    if (table.size() != want)
      throw FormatError("arpa: section \\" + std::to_string(order) + "-grams: (line " +
                        std::to_string(section_line) + ") declared " +
                        std::to_string(want) + " entries but contains " +
                        std::to_string(table.size()));
  }
  if (!terminated) throw FormatError("arpa: unterminated model (missing \\end\\)");
  return model;
}

NgramModel load_arpa_text(const std::string& text) {
  std::istringstream in(text);
  return load_arpa(in);
}

NgramModel load_arpa_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open arpa file: " + path);
  return load_arpa(in);
}

void write_arpa(std::ostream& out, const NgramModel& model) {
  out << "\\data\\\n";
  for (int o = 1; o <= model.max_order(); ++o)
    out << "ngram " << o << "=" << model.size(o) << "\n";
  for (int o = 1; o <= model.max_order(); ++o) {
    out << "\n\\" << o << "-grams:\n";
    for (const auto& [words, entry] : model.entries(o)) {
      out << format_double(entry.log10_prob) << '\t' << join_words(words);
      if (entry.log10_backoff) out << '\t' << format_double(*entry.log10_backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

std::string arpa_to_string(const NgramModel& model) {
  std::ostringstream out;
  write_arpa(out, model);
  return out.str();
}

double score_sequence(const NgramModel& model, const Words& words,
                      const ScoreOptions& opts) {
  auto resolve = [&](const std::string& w) -> std::string {
    if (model.has_word(w)) return w;
    if (opts.oov == OovPolicy::map_to_unk && model.has_unk()) return kUnknownWord;
    throw Error("OOV word with no <unk> fallback: '" + w + "'");
  };

  std::vector<std::string> context;
  if (opts.add_markers) context.push_back(resolve(kSentenceStart));

  double total = 0.0;
  const auto max_ctx = static_cast<std::size_t>(model.max_order()) - 1;
  auto score_next = [&](const std::string& w) {
    total += model.cond_log10(context, w);
    context.push_back(w);
    if (context.size() > max_ctx)
      context.erase(context.begin(),
                    context.end() - static_cast<std::ptrdiff_t>(max_ctx));
  };
  for (const std::string& w : words) score_next(resolve(w));
  if (opts.add_markers) score_next(resolve(kSentenceEnd));
  return total;
}

}  // namespace nbr
