#include "nbr/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "nbr/error.hpp"
#include "nbr/rng.hpp"

namespace nbr {

void ChannelConfig::validate() const {
  auto in01 = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!in01(sub_rate) || !in01(ins_rate) || !in01(del_rate))
    throw Error("channel rates must lie in [0, 1]");
  if (sub_rate + del_rate > 1.0)
    throw Error("sub_rate + del_rate must not exceed 1 per word position");
  if (n < 1) throw Error("list size n must be >= 1");
  if (score_noise_sigma < 0.0) throw Error("score_noise_sigma must be >= 0");
  if (include_reference_rank && (*include_reference_rank < 1 || *include_reference_rank > n))
    throw Error("include_reference_rank must lie in [1, n]");
  for (const auto& [word, alts] : confusion_table) {
    double total = 0.0;
    for (const auto& [alt, w] : alts) {
      if (w < 0.0) throw Error("negative confusion weight for '" + word + "' -> '" + alt + "'");
      total += w;
    }
    if (!alts.empty() && total <= 0.0)
      throw Error("confusion weights for '" + word + "' sum to zero");
  }
}

namespace {

struct Corruption {
  Words text;
  int edits = 0;
};

const std::string* sample_alternative(
    const std::map<std::string, double>& alts, Rng& rng) {
  double total = 0.0;
  for (const auto& [alt, w] : alts) total += w;
  if (total <= 0.0) return nullptr;
  double x = rng.uniform01() * total;
  for (const auto& [alt, w] : alts) {
    x -= w;
    if (x <= 0.0) return &alt;
  }
  return &alts.rbegin()->first;
}

Corruption corrupt_once(const Words& reference, const ChannelConfig& cfg, Rng& rng) {
  Corruption out;
  for (const std::string& word : reference) {
    const double u = rng.uniform01();
    if (u < cfg.sub_rate) {
      const auto it = cfg.confusion_table.find(word);
      const std::string* alt =
          it != cfg.confusion_table.end() ? sample_alternative(it->second, rng) : nullptr;
      if (alt) {
        out.text.push_back(*alt);
        ++out.edits;
      } else {
        out.text.push_back(word);  // no confusion entry: leave intact
      }
    } else if (u < cfg.sub_rate + cfg.del_rate) {
      ++out.edits;
      continue;
    } else {
      out.text.push_back(word);
    }
    if (cfg.ins_rate > 0.0 && rng.uniform01() < cfg.ins_rate) {
      out.text.push_back(out.text.empty() ? word : out.text.back());
      ++out.edits;
    }
  }
  return out;
}

}  // namespace

NBestList generate(const Words& reference, const std::string& utterance_id,
                   const ChannelConfig& cfg, SynthStats* stats) {
  if (reference.empty()) throw Error("generate: empty reference");
  cfg.validate();
  Rng rng(cfg.seed);

  const int n_corrupted = cfg.include_reference_rank ? cfg.n - 1 : cfg.n;
  std::vector<Corruption> drawn;
  std::set<Words> seen;
  for (int i = 0; i < n_corrupted; ++i) {
    Corruption c = corrupt_once(reference, cfg, rng);
    int attempts = 1;
    while (seen.count(c.text) && attempts < 100) {
      c = corrupt_once(reference, cfg, rng);
      ++attempts;
    }
    if (seen.count(c.text) && stats) ++stats->duplicate_hypotheses;
    if (stats) stats->corruption_draws += c.edits;
    seen.insert(c.text);
    drawn.push_back(std::move(c));
  }

  struct Scored {
    Words text;
    double score;
  };
  std::vector<Scored> scored;
  scored.reserve(drawn.size());
  for (const Corruption& c : drawn)
    scored.push_back({c.text, -static_cast<double>(c.edits) +
                                  (cfg.score_noise_sigma > 0.0
                                       ? rng.gaussian(cfg.score_noise_sigma)
                                       : 0.0)});
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });

  if (cfg.include_reference_rank) {
    const auto pos = static_cast<std::size_t>(*cfg.include_reference_rank) - 1;
    double score = 0.0;
    if (scored.empty()) {
      score = 0.0;
    } else if (pos == 0) {
      score = scored.front().score + 1.0;
    } else if (pos >= scored.size()) {
      score = scored.back().score - 1.0;
    } else {
      score = (scored[pos - 1].score + scored[pos].score) / 2.0;
    }
    scored.insert(scored.begin() + static_cast<std::ptrdiff_t>(pos),
                  {reference, score});
  }

  NBestList list;
  list.utterance_id = utterance_id;
  list.reference = reference;
  int rank = 1;
  for (Scored& s : scored)
    list.hypotheses.push_back({std::move(s.text), s.score, rank++});
  return list;
}

SynthCorpus generate_corpus(std::span<const Words> references, const ChannelConfig& cfg) {
  cfg.validate();
  SynthCorpus corpus;
  SynthStats stats;
  char id_buf[32];
  for (std::size_t i = 0; i < references.size(); ++i) {
    std::snprintf(id_buf, sizeof(id_buf), "utt-%04zu", i + 1);
    ChannelConfig child = cfg;
    child.seed = mix_seed(cfg.seed, i);
    corpus.lists.push_back(generate(references[i], id_buf, child, &stats));
  }

  nlohmann::ordered_json manifest;
  manifest["generator"] = "synth-noisy-channel";
  auto& c = manifest["config"];
  c["sub_rate"] = cfg.sub_rate;
  c["ins_rate"] = cfg.ins_rate;
  c["del_rate"] = cfg.del_rate;
  c["n"] = cfg.n;
  c["seed"] = cfg.seed;
  c["score_noise_sigma"] = cfg.score_noise_sigma;
  if (cfg.include_reference_rank)
    c["include_reference_rank"] = *cfg.include_reference_rank;
  else
    c["include_reference_rank"] = nullptr;
  auto& table = c["confusion_table"] = nlohmann::ordered_json::object();
  for (const auto& [word, alts] : cfg.confusion_table) {
    auto& entry = table[word] = nlohmann::ordered_json::object();
    for (const auto& [alt, w] : alts) entry[alt] = w;
  }
  manifest["utterances"] = corpus.lists.size();
  manifest["stats"] = {{"duplicate_hypotheses", stats.duplicate_hypotheses},
                       {"corruption_draws", stats.corruption_draws}};
  corpus.manifest_json = manifest.dump(2) + "\n";
  return corpus;
}

}  // namespace nbr
