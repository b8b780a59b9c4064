#include "toy_lm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nbr::test {

namespace {

using Gram = std::vector<std::string>;

std::string format_log10(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string build_arpa_from_sentences(const std::vector<nbr::Words>& sentences,
                                      const ToyLmOptions& opts) {
  if (opts.order < 1) throw std::invalid_argument("order must be >= 1");
  if (opts.discount <= 0.0 || opts.discount >= 1.0)
    throw std::invalid_argument("discount must lie in (0, 1)");

  // Counts per order.
  std::vector<std::map<Gram, long>> counts(static_cast<std::size_t>(opts.order));
  for (const nbr::Words& sentence : sentences) {
    nbr::Words seq;
    if (opts.with_markers) seq.push_back("<s>");
    seq.insert(seq.end(), sentence.begin(), sentence.end());
    if (opts.with_markers) seq.push_back("</s>");
    for (int n = 1; n <= opts.order; ++n) {
      for (std::size_t i = 0; i + n <= seq.size(); ++i) {
        Gram g(seq.begin() + static_cast<long>(i), seq.begin() + static_cast<long>(i + n));
        if (n == 1 && g[0] == "<s>") continue;  // <s> is context only
        ++counts[static_cast<std::size_t>(n) - 1][g];
      }
    }
  }

  // Unigram distribution with additive smoothing over the closed vocabulary.
  std::set<std::string> vocab;
  for (const auto& [g, c] : counts[0]) vocab.insert(g[0]);
  if (opts.with_unk) vocab.insert("<unk>");
  long total = 0;
  for (const auto& [g, c] : counts[0]) total += c;
  const double denom = static_cast<double>(total) +
                       opts.additive * static_cast<double>(vocab.size());
  std::map<Gram, double> prob;  // conditional probability per stored n-gram
  for (const std::string& w : vocab) {
    const auto it = counts[0].find({w});
    const double c = it == counts[0].end() ? 0.0 : static_cast<double>(it->second);
    prob[{w}] = (c + opts.additive) / denom;
  }

  // Full backoff conditional at any order, used while building order n+1.
  std::map<Gram, double> bow;  // backoff weight per history gram
  auto cond = [&](const Gram& history, const std::string& w) {
    Gram h = history;
    double weight = 1.0;
    while (true) {
      Gram g = h;
      g.push_back(w);
      if (const auto it = prob.find(g); it != prob.end()) return weight * it->second;
      if (h.empty()) throw std::logic_error("toy lm: word escaped the vocabulary: " + w);
      if (const auto it = bow.find(h); it != bow.end()) weight *= it->second;
      h.erase(h.begin());
    }
  };

  // Discounted MLE per order with exactly-normalizing backoff weights.
  for (int n = 2; n <= opts.order; ++n) {
    std::map<Gram, std::vector<std::pair<std::string, long>>> by_history;
    for (const auto& [g, c] : counts[static_cast<std::size_t>(n) - 1]) {
      Gram h(g.begin(), g.end() - 1);
      by_history[h].emplace_back(g.back(), c);
    }
    for (const auto& [h, followers] : by_history) {
      long h_count = 0;
      for (const auto& [w, c] : followers) h_count += c;
      double stored_mass = 0.0;
      double lower_mass = 0.0;
      Gram h_suffix(h.begin() + 1, h.end());
      for (const auto& [w, c] : followers) {
        const double p = (static_cast<double>(c) - opts.discount) / h_count;
        Gram g = h;
        g.push_back(w);
        prob[g] = p;
        stored_mass += p;
        lower_mass += cond(h_suffix, w);
      }
      if (lower_mass >= 1.0 - 1e-12)
        throw std::logic_error("toy lm: degenerate history, no backoff mass");
      bow[h] = (1.0 - stored_mass) / (1.0 - lower_mass);
    }
  }

  // Emit ARPA. <s> takes the conventional placeholder probability.
  std::vector<std::vector<std::pair<Gram, double>>> stored(
      static_cast<std::size_t>(opts.order));
  for (const auto& [g, p] : prob) stored[g.size() - 1].emplace_back(g, p);
  if (opts.with_markers) stored[0].push_back({{"<s>"}, 0.0});
  for (auto& level : stored) std::sort(level.begin(), level.end());

  std::ostringstream out;
  out << "\\data\\\n";
  for (int n = 1; n <= opts.order; ++n)
    out << "ngram " << n << "=" << stored[static_cast<std::size_t>(n) - 1].size() << "\n";
  for (int n = 1; n <= opts.order; ++n) {
    out << "\n\\" << n << "-grams:\n";
    for (const auto& [g, p] : stored[static_cast<std::size_t>(n) - 1]) {
      const bool is_start = n == 1 && g[0] == "<s>";
      out << (is_start ? std::string("-99") : format_log10(std::log10(p)));
      for (std::size_t i = 0; i < g.size(); ++i) out << (i == 0 ? '\t' : ' ') << g[i];
      if (const auto it = bow.find(g); it != bow.end())
        out << "\t" << format_log10(std::log10(it->second));
      out << "\n";
    }
  }
  out << "\n\\end\\\n";
  return out.str();
}

}  // namespace nbr::test
